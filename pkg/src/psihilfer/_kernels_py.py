"""Pure numpy product-trapezoid kernels (fallback for the compiled ``_kernels``).

For a target node u_n and a cell [u_j, u_j+1] with a = u_n - u_j and
d = u_j+1 - u_j, the kernel moments are written as d * a**(alpha-1) * G(q)
with q = d/a in (0, 1]. G0 - G1 multiplies f_j, G1 multiplies f_j+1, where

    G0(q) = int_0^1 (1 - q s)**(alpha-1) ds,   G1(q) = int_0^1 s (1 - q s)**(alpha-1) ds.

Small q uses the binomial series (the closed forms cancel badly there).
"""

import math

import numpy as np

SERIES_CUTOFF = 0.1
SERIES_TERMS = 20


BLOCK_CELLS = 1 << 20


def _series_coeffs(alpha):
    c = np.empty(SERIES_TERMS)
    c[0] = 1.0
    for k in range(SERIES_TERMS - 1):
        c[k + 1] = c[k] * (k + 1 - alpha) / (k + 1)
    k = np.arange(SERIES_TERMS)
    return c / (k + 1), c / (k + 2)


def cell_weights(a, d, alpha):
    a = np.asarray(a, dtype=float)
    d = np.asarray(d, dtype=float)
    q = d / a
    g0 = np.empty_like(q)
    g1 = np.empty_like(q)

    small = q < SERIES_CUTOFF
    if small.any():
        qs = q[small]
        c0, c1 = _series_coeffs(alpha)
        s0 = np.full_like(qs, c0[-1])
        s1 = np.full_like(qs, c1[-1])
        for k in range(SERIES_TERMS - 2, -1, -1):
            s0 = s0 * qs + c0[k]
            s1 = s1 * qs + c1[k]
        g0[small] = s0
        g1[small] = s1
    big = ~small
    if big.any():
        qb = q[big]
        with np.errstate(divide="ignore"):
            lg = np.log1p(-qb)
        e0 = -np.expm1(alpha * lg)
        e1 = -np.expm1((alpha + 1.0) * lg)
        g0[big] = e0 / (alpha * qb)
        g1[big] = (e0 / alpha - e1 / (alpha + 1.0)) / (qb * qb)

    scale = d * np.power(a, alpha - 1.0)
    return scale * (g0 - g1), scale * g1


def _row_blocks(u, alpha):
    """Yield (r0, r1, lo, hi): weights of rows r0..r1-1 on cells 0..r1-2."""
    n1 = u.size
    du = np.diff(u)
    r0 = 1
    while r0 < n1:
        r1 = min(n1, r0 + max(1, BLOCK_CELLS // r0))
        cols = r1 - 1
        rows = np.arange(r0, r1)[:, None]
        mask = np.arange(cols)[None, :] < rows
        a = u[r0:r1, None] - u[None, :cols]
        d = np.broadcast_to(du[None, :cols], a.shape)
        lo = np.zeros(a.shape)
        hi = np.zeros(a.shape)
        lo[mask], hi[mask] = cell_weights(a[mask], d[mask], alpha)
        yield r0, r1, lo, hi
        r0 = r1


def rl_weights(u, alpha):
    """Dense lower-triangular weight matrix W with (I^alpha f)(u_n) ~ W[n] @ f."""
    u = np.ascontiguousarray(u, dtype=float)
    w = np.zeros((u.size, u.size))
    for r0, r1, lo, hi in _row_blocks(u, alpha):
        cols = r1 - 1
        w[r0:r1, :cols] += lo
        w[r0:r1, 1 : cols + 1] += hi
    w /= math.gamma(alpha)
    return w


def rl_apply(u, f, alpha):
    """Matrix-free (block by block) evaluation of the same quadrature at every node."""
    u = np.ascontiguousarray(u, dtype=float)
    f = np.ascontiguousarray(f, dtype=float)
    out = np.zeros(u.size)
    for r0, r1, lo, hi in _row_blocks(u, alpha):
        cols = r1 - 1
        out[r0:r1] = lo @ f[:cols] + hi @ f[1 : cols + 1]
    return out / math.gamma(alpha)

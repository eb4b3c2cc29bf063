"""psi-Riemann-Liouville integral, psi-Hilfer derivative and their test oracles.

Kernel convention: (I^alpha f)(t) = 1/Gamma(alpha) * int_t0^t psi'(s) (psi(t) - psi(s))**(alpha-1) f(s) ds.

Everything is computed in the variable u = psi(t). A plain path is treated as
piecewise linear in u, with the kernel moments evaluated exactly
(product trapezoid, see ``_kernels_py``). A path tagged with a leading
exponent p is written as (u - u0)**p * z(u) and z is interpolated linearly
instead; the moments then reduce to incomplete beta functions. The tag makes
the rule exact on (u - u0)**p, which is what keeps the Hilfer composition
accurate on weakly singular data.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.special import beta as beta_fn
from scipy.special import betainc

from . import kernels
from .types import FracOrder, Path, PsiMap, TimeGrid, gamma_fn

__all__ = [
    "power_rule_oracle",
    "rl_integral",
    "psi_hilfer_derivative",
    "roundtrip_residual",
    "power_rule_convergence",
    "integrate_segment",
    "regular_weights",
    "tagged_weights",
    "psi_values",
    "ROUNDING_FLOOR",
]

# Errors at or below this (relative to the exact value) are rounding noise;
# refinement ratios are not computed from them.
ROUNDING_FLOOR = 1e-12
_EXP_TOL = 1e-12


def power_rule_oracle(delta: float, alpha: float, psi: PsiMap, t0: float, t: float) -> float:
    """Closed form of I^alpha applied to (psi(s) - psi(t0))**(delta-1)."""
    if not delta > 0 or not alpha > 0:
        raise ValueError("delta and alpha must be positive")
    if t < t0:
        raise ValueError("t must not precede t0")
    x = float(psi(t) - psi(t0))
    return gamma_fn(delta) / gamma_fn(delta + alpha) * x ** (delta + alpha - 1.0)


def psi_values(grid: TimeGrid, psi: PsiMap) -> np.ndarray:
    t = grid.solution_nodes
    psi.check_domain(t)
    u = np.asarray(psi(t), dtype=float)
    if np.any(np.diff(u) <= 0):
        raise ValueError(f"psi '{psi.name}' is not strictly increasing on the grid")
    return u


@lru_cache(maxsize=16)
def _regular_weights_cached(key: bytes, alpha: float) -> np.ndarray:
    w = kernels.rl_weights(np.frombuffer(key), alpha)
    w.setflags(write=False)
    return w


def regular_weights(u: np.ndarray, alpha: float) -> np.ndarray:
    """Dense product-trapezoid matrix; cached and read-only."""
    return _regular_weights_cached(np.ascontiguousarray(u, dtype=float).tobytes(), float(alpha))


def _beta_mass(v_lo, v_hi, A, a, b):
    """Regularized incomplete beta I_{v/A}(a, b) differenced over [v_lo, v_hi]."""
    r_lo = v_lo / A
    r_hi = v_hi / A
    direct = betainc(a, b, r_hi) - betainc(a, b, r_lo)
    comp = betainc(b, a, (A - v_lo) / A) - betainc(b, a, (A - v_hi) / A)
    return np.where(r_lo >= 0.5, comp, direct)


@lru_cache(maxsize=16)
def _tagged_weights_cached(key: bytes, alpha: float, p: float) -> np.ndarray:
    u = np.frombuffer(key)
    v = u - u[0]
    n1 = v.size
    wz = np.zeros((n1, n1))
    b0 = beta_fn(p + 1.0, alpha)
    b1 = beta_fn(p + 2.0, alpha)
    dv = np.diff(v)
    for n in range(1, n1):
        A = v[n]
        lo_v, hi_v = v[:n], v[1 : n + 1]
        m0 = A ** (alpha + p) * b0 * _beta_mass(lo_v, hi_v, A, p + 1.0, alpha)
        m1 = A ** (alpha + p + 1.0) * b1 * _beta_mass(lo_v, hi_v, A, p + 2.0, alpha)
        wz[n, :n] += (hi_v * m0 - m1) / dv[:n]
        wz[n, 1 : n + 1] += (m1 - lo_v * m0) / dv[:n]
    # z at u0 is extrapolated linearly from the next two nodes
    if n1 >= 3:
        c = v[1] / (v[2] - v[1])
        wz[:, 1] += (1.0 + c) * wz[:, 0]
        wz[:, 2] -= c * wz[:, 0]
    else:
        wz[:, 1] += wz[:, 0]
    wz[:, 0] = 0.0
    wz[:, 1:] *= np.power(v[1:], -p)
    wz /= math.gamma(alpha)
    wz.setflags(write=False)
    return wz


def tagged_weights(u: np.ndarray, alpha: float, p: float) -> np.ndarray:
    """Matrix for data of the form (u - u0)**p * z with z piecewise linear."""
    return _tagged_weights_cached(np.ascontiguousarray(u, dtype=float).tobytes(), float(alpha), float(p))


def _extrapolated_z0(values, v, p):
    z1 = values[1] * v[1] ** (-p)
    if values.size < 3:
        return z1
    z2 = values[2] * v[2] ** (-p)
    return z1 + (z1 - z2) * v[1] / (v[2] - v[1])


def integrate_segment(values: np.ndarray, u: np.ndarray, alpha: float, p: float | None):
    """I^alpha on [t0, T] samples; returns (values, leading exponent of the result).

    alpha == 0 is the identity. The value at t0 is the right limit when it
    is finite, else a 0 placeholder.
    """
    values = np.asarray(values, dtype=float)
    if alpha == 0.0:
        return values.copy(), p
    if p is None or p == 0.0:
        return kernels.rl_apply(u, values, alpha), alpha
    out = tagged_weights(u, alpha, p) @ values
    p_out = p + alpha
    if abs(p_out) <= _EXP_TOL:
        z0 = _extrapolated_z0(values, u - u[0], p)
        out[0] = z0 * gamma_fn(p + 1.0) / gamma_fn(p + 1.0 + alpha)
        p_out = 0.0
    else:
        out[0] = 0.0
    return out, (p_out if p_out != 0.0 else None)


def rl_integral(f: Path, alpha: float, psi: PsiMap) -> Path:
    """psi-Riemann-Liouville integral of order alpha from t0, at every node of [t0, T].

    History nodes of the result are 0. The result is tagged with leading
    exponent ``p + alpha`` (p = 0 for an untagged input).
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0,1]")
    if np.isnan(f.values).any():
        raise ValueError("path contains NaN")
    u = psi_values(f.grid, psi)
    out, p_out = integrate_segment(f.segment, u, alpha, f.leading_exponent)
    return Path.from_segment(f.grid, out, leading_exponent=p_out)


def _first_order_stage(inner, q, t, u, dpsi):
    """(1/psi') d/dt of inner; returns (values, leading exponent)."""
    if q is None or abs(q) <= _EXP_TOL:
        return np.gradient(inner, t, edge_order=2) / dpsi, None
    if q - 1.0 <= -1.0 + _EXP_TOL:
        raise ValueError("path is too singular at t0 for this order")
    v = u - u[0]
    z = np.empty_like(inner)
    z[1:] = inner[1:] * v[1:] ** (-q)
    z[0] = _extrapolated_z0(inner, v, q)
    dz = np.gradient(z, t, edge_order=2) / dpsi
    d = np.empty_like(inner)
    d[1:] = q * v[1:] ** (q - 1.0) * z[1:] + v[1:] ** q * dz[1:]
    if abs(q - 1.0) <= _EXP_TOL:
        d[0] = z[0]
        return d, None
    d[0] = 0.0
    return d, q - 1.0


def psi_hilfer_derivative(f: Path, order: FracOrder, psi: PsiMap) -> Path:
    """psi-Hilfer derivative of order (alpha, beta) for 0 < alpha <= 1.

    Inner integral of order (1-beta)(1-alpha), then (1/psi') d/dt by
    central differences (second-order one-sided at the ends), then outer
    integral of order beta(1-alpha). For a tagged input the inner result is
    split as (u - u0)**q * z and only z is differenced.
    """
    grid = f.grid
    if grid.n_steps + 1 < 3:
        raise ValueError("grid too short for the difference stencil")
    u = psi_values(grid, psi)
    t = grid.solution_nodes
    dpsi = np.asarray(psi.deriv(t), dtype=float)
    if np.any(~np.isfinite(dpsi)) or np.any(dpsi <= 0):
        raise ValueError(f"psi '{psi.name}' has a non-positive derivative on the grid")
    inner, q = integrate_segment(f.segment, u, order.inner_exponent, f.leading_exponent)
    d, qd = _first_order_stage(inner, q, t, u, dpsi)
    outer, r = integrate_segment(d, u, order.outer_exponent, qd)
    return Path.from_segment(grid, outer, leading_exponent=r)


def roundtrip_residual(f: Path, order: FracOrder, psi: PsiMap) -> float:
    """sup |D^{alpha,beta} I^alpha f - f| over [t0, T] without the first two nodes."""
    g = rl_integral(f, order.alpha, psi)
    d = psi_hilfer_derivative(g, order, psi)
    return float(np.max(np.abs(d.segment[2:] - f.segment[2:])))


def power_rule_convergence(psi: PsiMap, alpha: float, delta: float, t0: float, T: float, n_values):
    """Error of rl_integral on (psi - psi(t0))**(delta-1) at T for each n.

    Returns rows (n, error, ratio, order); ratio and order are NaN on the
    first row and whenever either error is at the rounding floor.
    """
    exact = power_rule_oracle(delta, alpha, psi, t0, T)
    floor = ROUNDING_FLOOR * max(1.0, abs(exact))
    p = delta - 1.0 if delta < 1.0 else None
    rows = []
    prev = None
    for n in n_values:
        grid = TimeGrid.uniform(t0, T, int(n))
        u = psi_values(grid, psi)
        v = u - u[0]
        with np.errstate(divide="ignore"):
            seg = np.power(v, delta - 1.0)
        if p is not None:
            seg[0] = 0.0
        out, _ = integrate_segment(seg, u, alpha, p)
        err = abs(out[-1] - exact)
        if prev is None or prev <= floor or err <= floor:
            ratio = order = math.nan
        else:
            ratio = prev / err
            order = math.log2(ratio)
        rows.append((int(n), err, ratio, order))
        prev = err
    return rows

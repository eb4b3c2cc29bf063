# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled product-trapezoid kernels; same formulas as ``_kernels_py``."""

import numpy as np

from libc.math cimport expm1, log1p, pow, tgamma

cdef double SERIES_CUTOFF = 0.1
cdef int SERIES_TERMS = 20  # must match the Series array length


cdef struct Series:
    double c0[20]
    double c1[20]


cdef inline void _coeffs(double alpha, Series* s) noexcept nogil:
    cdef double c = 1.0
    cdef int k
    for k in range(SERIES_TERMS):
        s.c0[k] = c / (k + 1)
        s.c1[k] = c / (k + 2)
        c *= (k + 1 - alpha) / (k + 1)


cdef inline void _cell(double a, double d, double alpha, const Series* s, double* lo, double* hi) noexcept nogil:
    cdef double q = d / a
    cdef double g0, g1, lg, e0, e1, scale
    cdef int k
    if q < SERIES_CUTOFF:
        g0 = s.c0[SERIES_TERMS - 1]
        g1 = s.c1[SERIES_TERMS - 1]
        for k in range(SERIES_TERMS - 2, -1, -1):
            g0 = g0 * q + s.c0[k]
            g1 = g1 * q + s.c1[k]
    else:
        lg = log1p(-q)
        e0 = -expm1(alpha * lg)
        e1 = -expm1((alpha + 1.0) * lg)
        g0 = e0 / (alpha * q)
        g1 = (e0 / alpha - e1 / (alpha + 1.0)) / (q * q)
    scale = d * pow(a, alpha - 1.0)
    lo[0] = scale * (g0 - g1)
    hi[0] = scale * g1


def cell_weights(a, d, double alpha):
    cdef const double[::1] av = np.ascontiguousarray(a, dtype=float).ravel()
    cdef const double[::1] dv = np.ascontiguousarray(d, dtype=float).ravel()
    cdef Py_ssize_t i, m = av.shape[0]
    lo = np.empty(m)
    hi = np.empty(m)
    cdef double[::1] lov = lo, hiv = hi
    cdef Series s
    with nogil:
        _coeffs(alpha, &s)
        for i in range(m):
            _cell(av[i], dv[i], alpha, &s, &lov[i], &hiv[i])
    return lo, hi


def rl_weights(u, double alpha):
    cdef const double[::1] uv = np.ascontiguousarray(u, dtype=float)
    cdef Py_ssize_t n1 = uv.shape[0], n, j
    w = np.zeros((n1, n1))
    cdef double[:, ::1] wv = w
    cdef double lo, hi, inv_g = 1.0 / tgamma(alpha)
    cdef Series s
    with nogil:
        _coeffs(alpha, &s)
        for n in range(1, n1):
            for j in range(n):
                _cell(uv[n] - uv[j], uv[j + 1] - uv[j], alpha, &s, &lo, &hi)
                wv[n, j] += lo * inv_g
                wv[n, j + 1] += hi * inv_g
    return w


def rl_apply(u, f, double alpha):
    cdef const double[::1] uv = np.ascontiguousarray(u, dtype=float)
    cdef const double[::1] fv = np.ascontiguousarray(f, dtype=float)
    cdef Py_ssize_t n1 = uv.shape[0], n, j
    out = np.zeros(n1)
    cdef double[::1] ov = out
    cdef double lo, hi, acc, inv_g = 1.0 / tgamma(alpha)
    cdef Series s
    with nogil:
        _coeffs(alpha, &s)
        for n in range(1, n1):
            acc = 0.0
            for j in range(n):
                _cell(uv[n] - uv[j], uv[j + 1] - uv[j], alpha, &s, &lo, &hi)
                acc += lo * fv[j] + hi * fv[j + 1]
            ov[n] = acc * inv_g
    return out

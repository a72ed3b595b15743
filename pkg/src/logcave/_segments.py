"""Stable integrals of exp over linear segments.

All functions take the endpoint log-values ``a`` and ``b`` of a segment of
unit length and return, elementwise,

    j00(a, b) = int_0^1 exp((1-t) a + t b) dt
    j10(a, b) = int_0^1 (1-t) exp(...) dt
    j20(a, b) = int_0^1 (1-t)^2 exp(...) dt
    j11(a, b) = int_0^1 t (1-t) exp(...) dt

For a segment of length L multiply by L (j00, j10, j11, j20 are first
integrals over t; the caller supplies the Jacobian). Near ``a == b`` the
closed forms cancel catastrophically, so a Taylor series is used for
``|b - a| < 1``.
"""

import math

import numpy as np

_SERIES_CUTOFF = 1.0
_N_TERMS = 22

_fact = np.array([math.factorial(n) for n in range(_N_TERMS)], dtype=float)
_n = np.arange(_N_TERMS, dtype=float)

# Coefficients of d^n.
_C00 = 1.0 / ((_n + 1) * _fact)
_C10 = 1.0 / ((_n + 1) * (_n + 2) * _fact)
_C20 = 2.0 / ((_n + 1) * (_n + 2) * (_n + 3) * _fact)
_C11 = 1.0 / ((_n + 2) * (_n + 3) * _fact)


def _prep(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a, b = np.broadcast_arrays(a, b)
    d = b - a
    small = np.abs(d) < _SERIES_CUTOFF
    return a, b, d, small


def _combine(a, b, d, small, coef, closed):
    out = np.empty(np.shape(d), dtype=float)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        if np.any(small):
            ds = d[small]
            out[small] = np.exp(a[small]) * ((ds[:, None] ** _n) @ coef)
        big = ~small
        if np.any(big):
            out[big] = closed(np.exp(a[big]), np.exp(b[big]), d[big])
    return out


def j00(a, b):
    a, b, d, small = _prep(a, b)
    return _combine(a, b, d, small, _C00, lambda ea, eb, d: (eb - ea) / d)


def j10(a, b):
    a, b, d, small = _prep(a, b)
    return _combine(a, b, d, small, _C10,
                    lambda ea, eb, d: (eb - ea - d * ea) / d**2)


def j20(a, b):
    a, b, d, small = _prep(a, b)
    return _combine(a, b, d, small, _C20,
                    lambda ea, eb, d: 2.0 * (eb - ea - d * ea - 0.5 * d * d * ea) / d**3)


def j11(a, b):
    a, b, d, small = _prep(a, b)
    return _combine(a, b, d, small, _C11,
                    lambda ea, eb, d: (d * (eb + ea) - 2.0 * (eb - ea)) / d**3)


def expm1_ratio(s):
    """(exp(s) - 1) / s with the removable singularity at 0 filled in."""
    s = np.asarray(s, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        out = np.where(np.abs(s) < 1e-5, 1.0 + s / 2.0 + s * s / 6.0, np.expm1(s) / s)
    return out

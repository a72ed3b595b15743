"""Pool-adjacent-violators for separable concave objectives.

``y`` is ordered by the covariate and ``groups`` holds the start index of
every run of tied covariate values (those must share one fitted value). The
per-point objective is ``phi(y_i - v)`` with ``phi`` concave and piecewise
linear on ``[t_0, t_K]``.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _slope_at(r, t, s):
    # right derivative of phi at r; clamps to the end segments
    k = np.searchsorted(t, r, side="right") - 1
    if k < 0:
        k = 0
    if k > s.size - 1:
        k = s.size - 1
    return s[k]


@njit(cache=True)
def _block_argmax(y, start, stop, t, s):
    """argmax_v sum_{start <= i < stop} phi(y_i - v) by bisection on the
    (nonincreasing) derivative in v."""
    ymax = y[start]
    ymin = y[start]
    for i in range(start, stop):
        if y[i] > ymax:
            ymax = y[i]
        if y[i] < ymin:
            ymin = y[i]
    lo = ymax - t[-1]
    hi = ymin - t[0]
    if lo >= hi:
        return 0.5 * (lo + hi)
    scale = max(abs(lo), abs(hi), t[-1] - t[0])
    for _ in range(200):
        if hi - lo <= 1e-15 * scale:
            break
        mid = 0.5 * (lo + hi)
        g = 0.0
        for i in range(start, stop):
            g -= _slope_at(y[i] - mid, t, s)
        if g > 0:
            lo = mid
        elif g < 0:
            hi = mid
        else:
            return mid
    return 0.5 * (lo + hi)


@njit(cache=True)
def concave_pava(y, groups, t, s):
    n = y.size
    ng = groups.size
    starts = np.empty(ng, dtype=np.int64)
    stops = np.empty(ng, dtype=np.int64)
    vals = np.empty(ng)
    top = 0
    for g in range(ng):
        a = groups[g]
        b = groups[g + 1] if g + 1 < ng else n
        starts[top] = a
        stops[top] = b
        vals[top] = _block_argmax(y, a, b, t, s)
        top += 1
        while top > 1 and vals[top - 2] > vals[top - 1]:
            stops[top - 2] = stops[top - 1]
            top -= 1
            vals[top - 1] = _block_argmax(y, starts[top - 1], stops[top - 1], t, s)
    out = np.empty(n)
    for b in range(top):
        for i in range(starts[b], stops[b]):
            out[i] = vals[b]
    return out

"""Compiled active-set kernel for the log-concave projection.

Works on sorted, standardized atoms ``z`` with weights ``w``. The log-density
is parametrized by its values ``eta`` at an active subset ``K`` of atom
indices (always containing both ends) and is linear in between.

Status codes returned by :func:`solve`: 0 converged, 1 iteration cap,
2 stalled active-set step, 3 log-likelihood decreased.
"""

import math

import numpy as np
from numba import njit

_N_TERMS = 22


@njit(cache=True)
def _series(d, kind):
    # sum_n d^n / n! * c_n with c_n the moment of the weight function
    total = 0.0
    term = 1.0  # d^n / n!
    for n in range(_N_TERMS):
        if kind == 0:
            c = 1.0 / (n + 1)
        elif kind == 1:
            c = 1.0 / ((n + 1) * (n + 2))
        elif kind == 2:
            c = 2.0 / ((n + 1) * (n + 2) * (n + 3))
        else:
            c = 1.0 / ((n + 2) * (n + 3))
        total += term * c
        term *= d / (n + 1)
    return total


@njit(cache=True)
def j00(a, b):
    d = b - a
    if abs(d) < 1.0:
        return math.exp(a) * _series(d, 0)
    return (math.exp(b) - math.exp(a)) / d


@njit(cache=True)
def j10(a, b):
    d = b - a
    if abs(d) < 1.0:
        return math.exp(a) * _series(d, 1)
    ea = math.exp(a)
    return (math.exp(b) - ea - d * ea) / (d * d)


@njit(cache=True)
def j20(a, b):
    d = b - a
    if abs(d) < 1.0:
        return math.exp(a) * _series(d, 2)
    ea = math.exp(a)
    return 2.0 * (math.exp(b) - ea - d * ea - 0.5 * d * d * ea) / (d * d * d)


@njit(cache=True)
def j11(a, b):
    d = b - a
    if abs(d) < 1.0:
        return math.exp(a) * _series(d, 3)
    ea = math.exp(a)
    eb = math.exp(b)
    return (d * (eb + ea) - 2.0 * (eb - ea)) / (d * d * d)


@njit(cache=True)
def knot_weights(z, w, K):
    k = K.size
    W = np.zeros(k)
    j = 0
    for i in range(z.size):
        while j < k - 2 and i >= K[j + 1]:
            j += 1
        t0 = z[K[j]]
        t1 = z[K[j + 1]]
        lam = (z[i] - t0) / (t1 - t0)
        W[j] += w[i] * (1.0 - lam)
        W[j + 1] += w[i] * lam
    return W


@njit(cache=True)
def objective(t, W, eta):
    val = 1.0
    for i in range(eta.size):
        val += W[i] * eta[i]
    for i in range(eta.size - 1):
        val -= (t[i + 1] - t[i]) * j00(eta[i], eta[i + 1])
    if not math.isfinite(val):
        return -math.inf
    return val


@njit(cache=True)
def _tridiag_solve(diag, off, rhs):
    # symmetric positive definite tridiagonal system, Thomas algorithm
    n = diag.size
    c = np.empty(n)
    x = np.empty(n)
    beta = diag[0]
    x[0] = rhs[0] / beta
    for i in range(1, n):
        c[i] = off[i - 1] / beta
        beta = diag[i] - off[i - 1] * c[i]
        x[i] = (rhs[i] - off[i - 1] * x[i - 1]) / beta
    for i in range(n - 2, -1, -1):
        x[i] -= c[i + 1] * x[i + 1]
    return x


@njit(cache=True)
def newton(t, W, eta, max_iter):
    """Maximize the log-likelihood over values at a fixed knot set."""
    k = eta.size
    eta = eta.copy()
    f = objective(t, W, eta)
    g = np.empty(k)
    diag = np.empty(k)
    off = np.empty(k - 1)
    n_it = 0
    for n_it in range(1, max_iter + 1):
        for i in range(k):
            g[i] = W[i]
            diag[i] = 0.0
        for i in range(k - 1):
            L = t[i + 1] - t[i]
            a = eta[i]
            b = eta[i + 1]
            g[i] -= L * j10(a, b)
            g[i + 1] -= L * j10(b, a)
            diag[i] += L * j20(a, b)
            diag[i + 1] += L * j20(b, a)
            off[i] = L * j11(a, b)
        d = _tridiag_solve(diag, off, g)
        dec = 0.0
        for i in range(k):
            dec += g[i] * d[i]
        if not dec > 1e-26:
            break
        step = 1.0
        while True:
            trial = eta + step * d
            ft = objective(t, W, trial)
            if ft >= f + 1e-4 * step * dec:
                break
            step *= 0.5
            if step < 1e-12:
                return eta, f, n_it
        eta = trial
        f = ft
    return eta, f, n_it


@njit(cache=True)
def prefix_H(z, cw, cwz, K, eta):
    """H(z_i) = int_{-inf}^{z_i} (F - G) for every atom."""
    k = K.size
    masses = np.empty(k - 1)
    total = 0.0
    for i in range(k - 1):
        masses[i] = (z[K[i + 1]] - z[K[i]]) * j00(eta[i], eta[i + 1])
        total += masses[i]
    cm = np.empty(k)
    cum_int = np.empty(k)
    cm[0] = 0.0
    cum_int[0] = 0.0
    for i in range(k - 1):
        L = z[K[i + 1]] - z[K[i]]
        cum_int[i + 1] = cum_int[i] + cm[i] * L + L * L * j10(eta[i], eta[i + 1]) / total
        cm[i + 1] = cm[i] + masses[i] / total
    H = np.empty(z.size)
    j = 0
    for i in range(z.size):
        while j < k - 2 and i >= K[j + 1]:
            j += 1
        t0 = z[K[j]]
        L = z[K[j + 1]] - t0
        u = z[i] - t0
        a = eta[j]
        s = (eta[j + 1] - a) / L
        IF = cum_int[j] + cm[j] * u + u * u * j10(a, a + s * u) / total
        IG = 0.0
        if i > 0:
            IG = z[i] * cw[i - 1] - cwz[i - 1]
        H[i] = IF - IG
    return H


@njit(cache=True)
def _slope_drops(t, eta):
    k = eta.size
    out = np.empty(k - 2)
    for i in range(k - 2):
        s0 = (eta[i + 1] - eta[i]) / (t[i + 1] - t[i])
        s1 = (eta[i + 2] - eta[i + 1]) / (t[i + 2] - t[i + 1])
        out[i] = s0 - s1
    return out


@njit(cache=True)
def _interp_at(zk_new, zk, eta):
    return np.interp(zk_new, zk, eta)


@njit(cache=True)
def solve(z, w, add_tol, max_iter, newton_iter, trace):
    """Active-set ascent. Returns (K, eta, n_trace, n_outer, n_newton, status)."""
    m = z.size
    cw = np.cumsum(w)
    cwz = np.cumsum(w * z)
    active = np.zeros(m, dtype=np.bool_)
    active[0] = True
    active[m - 1] = True
    K = np.flatnonzero(active)
    eta0 = np.full(2, -math.log(z[m - 1] - z[0]))
    t = z[K]
    W = knot_weights(z, w, K)
    eta, f, it = newton(t, W, eta0, newton_iter)
    n_newton = it
    n_trace = 0
    trace[n_trace] = f
    n_trace += 1

    for outer in range(1, max_iter + 1):
        H = prefix_H(z, cw, cwz, K, eta)
        # best candidate inside every gap between active knots
        new_mask = np.zeros(m, dtype=np.bool_)
        n_new = 0
        best = -1
        best_h = add_tol
        for g in range(K.size - 1):
            arg = -1
            hmax = add_tol
            for i in range(K[g] + 1, K[g + 1]):
                if H[i] > hmax:
                    hmax = H[i]
                    arg = i
            if arg >= 0:
                new_mask[arg] = True
                n_new += 1
                if hmax > best_h:
                    best_h = hmax
                    best = arg
        if n_new == 0:
            return K, eta, n_trace, outer, n_newton, 0

        mask = active | new_mask
        K_new = np.flatnonzero(mask)
        eta_cur = _interp_at(z[K_new], z[K], eta)
        f_cur = f
        while True:
            t_new = z[K_new]
            W = knot_weights(z, w, K_new)
            eta_cand, f_cand, it = newton(t_new, W, eta_cur, newton_iter)
            n_newton += it
            drop_cand = _slope_drops(t_new, eta_cand)
            ok = True
            for v in drop_cand:
                if v < 0:
                    ok = False
                    break
            if ok:
                eta_cur = eta_cand
                f_cur = f_cand
                break
            drop_old = _slope_drops(t_new, eta_cur)
            step = 1.0
            for i in range(drop_cand.size):
                if drop_cand[i] < 0:
                    do = max(drop_old[i], 0.0)
                    tk = do / (do - drop_cand[i])
                    if tk < step:
                        step = tk
            if step > 0:
                eta_cur = eta_cur + step * (eta_cand - eta_cur)
                f_cur = objective(t_new, W, eta_cur)
            keep = np.ones(K_new.size, dtype=np.bool_)
            for i in range(drop_cand.size):
                if drop_cand[i] < 0:
                    do = max(drop_old[i], 0.0)
                    tk = do / (do - drop_cand[i])
                    if tk <= step + 1e-12:
                        keep[i + 1] = False
                        mask[K_new[i + 1]] = False
            K_new = K_new[keep]
            eta_cur = eta_cur[keep]
            if step == 0 and K_new.size == K.size:
                # simultaneous additions blocked each other; the single best
                # knot always gives an ascent direction
                if n_new > 1:
                    n_new = 1
                    mask = active.copy()
                    mask[best] = True
                    K_new = np.flatnonzero(mask)
                    eta_cur = _interp_at(z[K_new], z[K], eta)
                    continue
                return K, eta, n_trace, outer, n_newton, 2
        if f_cur < f - 1e-10 * max(1.0, abs(f)):
            return K, eta, n_trace, outer, n_newton, 3
        active = mask
        K = K_new
        eta = eta_cur
        f = f_cur
        if n_trace < trace.size:
            trace[n_trace] = f
            n_trace += 1
    return K, eta, n_trace, max_iter, n_newton, 1

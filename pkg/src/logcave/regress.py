"""Regression with a log-concave error density of mean zero.

The model is ``Y_i = mu(x_i) + eps_i`` with ``mu`` either linear in the
columns of a design matrix or nondecreasing in a scalar covariate. The
estimator maximizes the joint criterion

    Lambda(phi, m) = mean_i phi(Y_i - m(x_i)) - int exp(phi) + 1

over concave ``phi`` and ``m`` in the model, then shifts ``(phi, m)`` so
that the error density has mean zero (``Lambda`` is unchanged by the shift).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize
import scipy.sparse

from . import _pava
from .density import LogConcaveDensity, affine_transform
from .empirical import EmpiricalDistribution, convolve, from_samples
from .errors import DegenerateSupport, LengthMismatch, NoConvergence, OutOfRange, PerfectFit
from .project import (Certificate, FitOptions, certify, fit, loglik, profile_loglik,
                      profile_loglik_values)


@dataclass(frozen=True)
class LinearBasis:
    design: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.design, dtype=float)
        if X.ndim != 2 or X.shape[1] < 1:
            raise ValueError("design must be a 2-d array")
        if not np.all(np.isfinite(X)):
            raise ValueError("design entries must be finite")
        if not np.all(X[:, 0] == 1.0):
            raise ValueError("first design column must be the intercept (all ones)")
        object.__setattr__(self, "design", X)

    @property
    def n(self):
        return self.design.shape[0]


@dataclass(frozen=True)
class Isotonic:
    x: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        if not np.all(np.isfinite(x)):
            raise ValueError("covariate must be finite")
        object.__setattr__(self, "x", x)

    @property
    def n(self):
        return self.x.size

    @property
    def order(self):
        return np.argsort(self.x, kind="stable")

    def tie_groups(self):
        """Start positions, in sorted order, of runs of equal covariate."""
        xs = self.x[self.order]
        starts = np.ones(xs.size, dtype=bool)
        starts[1:] = xs[1:] != xs[:-1]
        return np.flatnonzero(starts)


def linear_design(x) -> np.ndarray:
    """Design matrix ``[1, x]`` (x may be 1-d or 2-d)."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    return np.column_stack([np.ones(x.shape[0]), x])


@dataclass(frozen=True)
class DEOptions:
    population: int | None = None
    crossover: float = 0.9
    diff_weight: float = 0.8
    generations: int = 300
    seed: int = 0
    tol: float = 1e-7

    def __post_init__(self):
        if self.population is not None and self.population < 4:
            raise ValueError("population must be at least 4")
        if not 0 < self.crossover <= 1:
            raise ValueError("crossover must lie in (0, 1]")
        if not 0 < self.diff_weight <= 2:
            raise ValueError("diff_weight must lie in (0, 2]")
        if self.generations < 1:
            raise ValueError("generations must be positive")


@dataclass
class RegressionFit:
    psi: LogConcaveDensity
    mu_values: np.ndarray
    lambda_hat: float
    residuals: EmpiricalDistribution
    theta: np.ndarray | None = None
    certificate: Certificate | None = None
    solver_trace: dict = field(default_factory=dict)

    def quantile_curve(self, beta: float) -> np.ndarray:
        return quantile_curve(self, beta)

    def to_dict(self) -> dict:
        out = {
            "psi": self.psi.to_dict(),
            "mu_values": self.mu_values.tolist(),
            "lambda_hat": self.lambda_hat,
            "theta": None if self.theta is None else self.theta.tolist(),
            "certificate": None if self.certificate is None else self.certificate.to_dict(),
            "solver_trace": self.solver_trace,
        }
        return out


_TIE_REL = 1e-11

# ---------------------------------------------------------------------------
# criterion and centering

def joint_loglik(phi: LogConcaveDensity, mu_values, y) -> float:
    """Lambda(phi, m) for fitted values ``mu_values``."""
    mu_values = np.asarray(mu_values, dtype=float)
    y = np.asarray(y, dtype=float)
    if mu_values.shape != y.shape:
        raise LengthMismatch("mu_values and y differ in length")
    r = y - mu_values
    lo, hi = phi.support
    # residuals merged into an end atom may overshoot the support by rounding
    slack = _TIE_REL * (hi - lo)
    if r.min() < lo - slack or r.max() > hi + slack:
        return -math.inf
    r = np.clip(r, lo, hi)
    return float(np.mean(phi.eval_log(r)) - phi.mass() + 1.0)


def center(phi_hat: LogConcaveDensity, mu_values, y):
    """Shift (phi, m) to (phi(. + c), m + c) with c the mean residual."""
    mu_values = np.asarray(mu_values, dtype=float)
    c = float(np.mean(np.asarray(y, dtype=float) - mu_values))
    return affine_transform(phi_hat, -c, 1.0), mu_values + c


def check_perfect_fit(model, y) -> bool:
    """True iff ``y`` lies in the model (no error density exists then)."""
    y = np.asarray(y, dtype=float)
    if isinstance(model, LinearBasis):
        X = model.design
        theta, *_ = np.linalg.lstsq(X, y, rcond=None)
        return bool(np.linalg.norm(y - X @ theta) < 1e-10 * np.linalg.norm(y))
    if isinstance(model, Isotonic):
        ys = y[model.order]
        groups = model.tie_groups()
        gmax = np.maximum.reduceat(ys, groups)
        gmin = np.minimum.reduceat(ys, groups)
        return bool(np.all(gmax == gmin) and np.all(np.diff(gmin) >= 0))
    raise TypeError(f"unknown regression model {model!r}")


def _residual_distribution(r) -> EmpiricalDistribution:
    r = np.asarray(r, dtype=float)
    spread = float(r.max() - r.min())
    # solvers park residuals on the kinks of phi, up to float noise
    return from_samples(r, tie_tol=_TIE_REL * spread)


def _phi_step(r, opts: FitOptions):
    q = _residual_distribution(r)
    phi = fit(q, opts)
    return phi, loglik(phi, q)


def _finish(phi, mu, y, opts, theta=None, trace=None) -> RegressionFit:
    psi, mu_c = center(phi, mu, y)
    q = _residual_distribution(y - mu_c)
    return RegressionFit(psi=psi, mu_values=mu_c, lambda_hat=joint_loglik(psi, mu_c, y),
                         residuals=q, theta=theta, certificate=certify(psi, q, opts.certificate_tol),
                         solver_trace=trace or {})


# ---------------------------------------------------------------------------
# m-steps

def _phi_pieces(phi: LogConcaveDensity):
    t = phi.knots
    return t, phi.logvals, phi.slopes


def _linear_m_step(phi: LogConcaveDensity, X, y, theta0):
    """Maximize sum_i phi(y_i - x_i theta) exactly, as a linear program.

    phi is the minimum of its segment lines on [t_0, t_K]; with auxiliary
    u_i <= every line at the residual the problem is linear.
    """
    t, v, s = _phi_pieces(phi)
    n, p = X.shape
    k = s.size
    # variables: theta (p), u (n); minimize -sum u
    c = np.concatenate([np.zeros(p), -np.ones(n)])
    rows = []
    rhs = []
    eye = scipy.sparse.identity(n, format="csr")
    Xs = scipy.sparse.csr_matrix(X)
    for j in range(k):
        # u_i + s_j x_i theta <= v_j + s_j (y_i - t_j)
        rows.append(scipy.sparse.hstack([s[j] * Xs, eye]))
        rhs.append(v[j] + s[j] * (y - t[j]))
    zero = scipy.sparse.csr_matrix((n, n))
    rows.append(scipy.sparse.hstack([Xs, zero]))       # y - x theta >= t_0
    rhs.append(y - t[0])
    rows.append(scipy.sparse.hstack([-Xs, zero]))      # y - x theta <= t_K
    rhs.append(t[-1] - y)
    A = scipy.sparse.vstack(rows, format="csr")
    b = np.concatenate(rhs)
    bounds = [(None, None)] * (p + n)
    res = scipy.optimize.linprog(c, A_ub=A, b_ub=b, bounds=bounds, method="highs")
    if res.status != 0:
        return theta0
    return res.x[:p]


def _isotonic_m_step(phi: LogConcaveDensity, model: Isotonic, y):
    order = model.order
    ys = np.ascontiguousarray(y[order])
    t, _, s = _phi_pieces(phi)
    m_sorted = _pava.concave_pava(ys, model.tie_groups().astype(np.int64),
                                  np.ascontiguousarray(t), np.ascontiguousarray(s))
    m = np.empty_like(m_sorted)
    m[order] = m_sorted
    return m


def isotonic_l2(x, y, weights=None) -> np.ndarray:
    """Least-squares nondecreasing fit (tied covariates share a value)."""
    model = Isotonic(x)
    y = np.asarray(y, dtype=float)
    w = np.ones_like(y) if weights is None else np.asarray(weights, dtype=float)
    order = model.order
    groups = model.tie_groups()
    ys, ws = y[order], w[order]
    gw = np.add.reduceat(ws, groups)
    gy = np.add.reduceat(ws * ys, groups) / gw
    vals, wts, sizes = [], [], []
    for g in range(groups.size):
        vals.append(gy[g])
        wts.append(gw[g])
        sizes.append(1)
        while len(vals) > 1 and vals[-2] > vals[-1]:
            v2, w2, s2 = vals.pop(), wts.pop(), sizes.pop()
            wsum = wts[-1] + w2
            vals[-1] = (vals[-1] * wts[-1] + v2 * w2) / wsum
            wts[-1] = wsum
            sizes[-1] += s2
    group_vals = np.repeat(vals, sizes)
    counts = np.diff(np.append(groups, y.size))
    fitted_sorted = np.repeat(group_vals, counts)
    out = np.empty_like(y)
    out[order] = fitted_sorted
    return out


# ---------------------------------------------------------------------------
# solvers

def fit_alternating(model, y, opts: FitOptions | None = None, max_rounds: int = 100,
                    tol: float = 1e-8, init=None) -> RegressionFit:
    """Alternate a projection step for phi with an m-step for the regression
    function. The criterion never decreases; the result is centered.

    ``init`` may supply starting fitted values (defaults: least squares for
    a linear basis, the L2 isotonic fit otherwise).
    """
    opts = opts or FitOptions()
    y = np.asarray(y, dtype=float)
    if model.n != y.size:
        raise LengthMismatch("design and response differ in length")
    if check_perfect_fit(model, y):
        raise PerfectFit("response lies in the regression model")

    linear = isinstance(model, LinearBasis)
    if linear:
        X = model.design
        theta = np.linalg.lstsq(X, y, rcond=None)[0] if init is None else np.asarray(init, float)
        mu = X @ theta
    else:
        theta = None
        mu = isotonic_l2(model.x, y) if init is None else np.asarray(init, dtype=float)

    history = []
    phi, lam = _phi_step(y - mu, opts)
    history.append(lam)
    converged = False
    for _ in range(max_rounds):
        if linear:
            theta_new = _linear_m_step(phi, X, y, theta)
            mu_new = X @ theta_new
        else:
            mu_new = _isotonic_m_step(phi, model, y)
        if joint_loglik(phi, mu_new, y) < joint_loglik(phi, mu, y):
            converged = True
            break
        try:
            phi_new, lam_new = _phi_step(y - mu_new, opts)
        except DegenerateSupport:
            break
        if lam_new < lam:
            converged = True
            break
        gain = lam_new - lam
        phi, lam, mu = phi_new, lam_new, mu_new
        if linear:
            theta = theta_new
        history.append(lam)
        if gain < tol:
            converged = True
            break
    result = _finish(phi, mu, y, opts, theta=theta,
                     trace={"method": "alternating", "lambda_trace": history,
                            "rounds": len(history) - 1, "converged": converged})
    if linear:
        result.theta = np.linalg.lstsq(X, result.mu_values, rcond=None)[0]
    return result


def _ls_summary(X, y):
    theta, *_ = np.linalg.lstsq(X, y, rcond=None)
    n, p = X.shape
    resid = y - X @ theta
    sigma2 = float(resid @ resid) / max(n - p, 1)
    cov = sigma2 * np.linalg.pinv(X.T @ X)
    return theta, np.sqrt(np.maximum(np.diag(cov), 0.0))


def fit_linear(design, y, de: DEOptions | None = None, inner: FitOptions | None = None,
               polish: bool = True) -> RegressionFit:
    """Profile-likelihood estimator for a linear model, globally maximized by
    differential evolution over the non-intercept coefficients.

    The search box is the least-squares estimate +/- 10 standard errors. The
    intercept does not enter the profile criterion and is fixed by
    centering. With ``polish`` the DE optimum is refined by alternating
    steps and the better of the two is returned; the other is recorded in
    ``solver_trace`` when the two differ by more than 1e-4 in the criterion.
    """
    de = de or DEOptions()
    inner = inner or FitOptions()
    model = design if isinstance(design, LinearBasis) else LinearBasis(design)
    X = model.design
    y = np.asarray(y, dtype=float)
    if model.n != y.size:
        raise LengthMismatch("design and response differ in length")
    if check_perfect_fit(model, y):
        raise PerfectFit("response lies in the column space of the design")

    theta_ls, se = _ls_summary(X, y)
    slopes = X[:, 1:]
    dim = slopes.shape[1]
    trace = {"method": "differential_evolution", "theta_ls": theta_ls.tolist()}

    if dim == 0:
        phi, lam = _phi_step(y - y.mean(), inner)
        return _finish(phi, np.full_like(y, y.mean()), y, inner,
                       theta=np.array([y.mean()]), trace=trace)

    def neg_profile(beta):
        try:
            return -profile_loglik_values(y - slopes @ beta, inner)
        except (DegenerateSupport, NoConvergence):
            return math.inf

    half = 10.0 * np.where(se[1:] > 0, se[1:], 1e-8 * (1 + np.abs(theta_ls[1:])))
    bounds = list(zip(theta_ls[1:] - half, theta_ls[1:] + half))
    population = de.population or 15 * dim
    res = scipy.optimize.differential_evolution(
        neg_profile, bounds, strategy="rand1bin", popsize=max(1, math.ceil(population / dim)),
        mutation=de.diff_weight, recombination=de.crossover, maxiter=de.generations,
        seed=de.seed, tol=de.tol, atol=0.0, polish=False, init="latinhypercube")
    beta_de = np.asarray(res.x, dtype=float)
    lam_de = -float(res.fun)
    lam_ls = -neg_profile(theta_ls[1:])
    trace.update(lambda_de=lam_de, lambda_ls=lam_ls, de_generations=int(res.nit),
                 de_evaluations=int(res.nfev))
    if lam_ls > lam_de:
        beta_de, lam_de = theta_ls[1:].copy(), lam_ls

    intercept = float(np.mean(y - slopes @ beta_de))
    theta = np.concatenate([[intercept], beta_de])
    phi, lam = _phi_step(y - X @ theta, inner)
    best = _finish(phi, X @ theta, y, inner, theta=theta, trace=trace)
    best.theta = np.linalg.lstsq(X, best.mu_values, rcond=None)[0]

    if polish:
        alt = fit_alternating(model, y, inner, init=theta)
        trace["lambda_alternating"] = alt.lambda_hat
        winner, loser = (alt, best) if alt.lambda_hat > best.lambda_hat else (best, alt)
        if abs(alt.lambda_hat - best.lambda_hat) > 1e-4:
            trace["alternates"] = [{"lambda_hat": loser.lambda_hat,
                                    "theta": loser.theta.tolist()}]
        if winner is alt:
            trace["selected"] = "alternating"
            alt.solver_trace = {**trace, "alternating": alt.solver_trace}
            return alt
    trace["selected"] = "differential_evolution"
    best.solver_trace = trace
    return best


def fit_isotonic(x, y, opts: FitOptions | None = None, **kwargs) -> RegressionFit:
    """Nondecreasing regression function with log-concave errors."""
    fit_ = fit_alternating(Isotonic(x), y, opts, **kwargs)
    # centering adds a constant, so monotonicity is preserved exactly
    return fit_


# ---------------------------------------------------------------------------
# quantile curves

def quantile_curve(fit_: RegressionFit, beta: float) -> np.ndarray:
    """mu(x_i) plus the beta-quantile of the fitted error density."""
    if not 0.0 < beta < 1.0:
        raise OutOfRange("beta must lie in (0, 1)")
    return fit_.mu_values + fit_.psi.quantile(beta)


def _weighted_lower_quantile(values, beta):
    v = np.sort(values)
    k = math.ceil(beta * v.size - 1e-12) - 1
    return float(v[min(max(k, 0), v.size - 1)])


def isotonic_quantile_baseline(x, y, beta: float) -> np.ndarray:
    """Nondecreasing minimizer of the check loss sum rho_beta(y_i - m(x_i)).

    Pool-adjacent-violators where each block takes the (lower) beta-quantile
    of its responses.
    """
    if not 0.0 < beta < 1.0:
        raise OutOfRange("beta must lie in (0, 1)")
    model = Isotonic(x)
    y = np.asarray(y, dtype=float)
    if y.size != model.n:
        raise LengthMismatch("x and y differ in length")
    order = model.order
    ys = y[order]
    groups = np.append(model.tie_groups(), y.size)
    starts, stops, vals = [], [], []
    for g in range(groups.size - 1):
        a, b = groups[g], groups[g + 1]
        starts.append(a)
        stops.append(b)
        vals.append(_weighted_lower_quantile(ys[a:b], beta))
        while len(vals) > 1 and vals[-2] > vals[-1]:
            stops[-2] = stops[-1]
            starts.pop()
            stops.pop()
            vals.pop()
            vals[-1] = _weighted_lower_quantile(ys[starts[-1]:stops[-1]], beta)
    fitted = np.empty_like(ys)
    for a, b, v in zip(starts, stops, vals):
        fitted[a:b] = v
    out = np.empty_like(y)
    out[order] = fitted
    return out


def check_loss(y, m, beta: float) -> float:
    r = np.asarray(y, dtype=float) - np.asarray(m, dtype=float)
    return float(np.sum(r * (beta - (r < 0))))


# ---------------------------------------------------------------------------
# Fisher consistency

def fisher_consistency_gap(q: EmpiricalDistribution, r: EmpiricalDistribution,
                           opts: FitOptions | None = None) -> float:
    """L(Q * R) - L(Q); nonpositive, zero only for a point mass R."""
    return profile_loglik(convolve(q, r), opts) - profile_loglik(q, opts)

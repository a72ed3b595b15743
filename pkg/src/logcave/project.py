"""Log-concave projection of one-dimensional distributions.

For a weighted discrete distribution ``Q`` with at least two atoms,
:func:`fit` returns the unique maximizer ``psi`` of

    L(phi, Q) = int phi dQ - int exp(phi(x)) dx + 1

over concave ``phi``. The maximizer is piecewise linear with kinks at atoms
of ``Q`` only, and is supported on ``[min atom, max atom]``, so the search
runs over log-values at a subset ``K`` of the atoms (the active knots).

Optimality is checked through the prefix integral

    H(x) = int_{-inf}^x (F(t) - G(t)) dt

with ``F`` the fitted and ``G`` the target distribution function:
``psi`` is optimal iff ``H <= 0`` everywhere, ``H = 0`` on the knots where
``psi`` is strictly concave, and ``H(+inf) = 0``. ``H(x_j)`` is also the
directional derivative of ``L`` for adding a concave kink at ``x_j``, which
is what drives the active-set iteration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernel
from .density import LogConcaveDensity, normalize
from .empirical import EmpiricalDistribution
from .errors import DegenerateSupport, NoConvergence


@dataclass(frozen=True)
class FitOptions:
    max_iter: int = 500
    grad_tol: float = 1e-8
    certificate_tol: float = 1e-6

    def __post_init__(self):
        if self.max_iter <= 0 or self.grad_tol <= 0 or self.certificate_tol <= 0:
            raise ValueError("all fit options must be positive")


@dataclass(frozen=True)
class Certificate:
    total_integral: float
    max_prefix: float
    max_knot_abs: float
    tol: float
    passed: bool
    max_prefix_at: float = float("nan")
    knot_tol: float = float("nan")

    def to_dict(self) -> dict:
        return {
            "total_integral": self.total_integral,
            "max_prefix": self.max_prefix,
            "max_prefix_at": self.max_prefix_at,
            "max_knot_abs": self.max_knot_abs,
            "tol": self.tol,
            "knot_tol": self.knot_tol,
            "passed": self.passed,
        }


@dataclass
class FitTrace:
    """Solver diagnostics; ``loglik`` is recorded after every accepted step."""

    loglik: list = field(default_factory=list)
    n_outer: int = 0
    n_newton: int = 0
    n_knots: int = 0
    certificate: Certificate | None = None


# ---------------------------------------------------------------------------
# log-likelihood

def loglik(phi: LogConcaveDensity, q: EmpiricalDistribution) -> float:
    """L(phi, Q); ``-inf`` when an atom of Q falls outside dom(phi)."""
    lo, hi = phi.support
    if q.atoms[0] < lo or q.atoms[-1] > hi:
        return -math.inf
    return float(np.dot(q.weights, phi.eval_log(q.atoms)) - phi.mass() + 1.0)


# ---------------------------------------------------------------------------
# solver

_STATUS = {1: "iteration cap reached", 2: "active-set step stalled",
           3: "log-likelihood decreased"}


def _solve_standardized(z, w, opts: FitOptions, add_tol: float, trace: FitTrace):
    buf = np.empty(opts.max_iter + 1)
    K, eta, n_trace, n_outer, n_newton, status = _kernel.solve(
        np.ascontiguousarray(z), np.ascontiguousarray(w), add_tol, opts.max_iter, 100, buf)
    trace.loglik.extend(buf[:n_trace].tolist())
    trace.n_outer += int(n_outer)
    trace.n_newton += int(n_newton)
    trace.n_knots = int(K.size)
    if status:
        raise NoConvergence(f"projection solver failed: {_STATUS[status]}")
    return K, eta


def _standardized_fit(atoms, weights, opts: FitOptions, trace: FitTrace):
    """Run the kernel on standardized atoms; returns (K, eta, scale, L(Q))."""
    center = float(np.dot(weights, atoms))
    scale = math.sqrt(float(np.dot(weights, (atoms - center) ** 2)))
    z = (atoms - center) / scale
    add_tol = min(opts.grad_tol, 0.01 * opts.certificate_tol / scale)
    K, eta = _solve_standardized(z, weights, opts, add_tol, trace)
    value = trace.loglik[-1] - math.log(scale)
    return K, eta, scale, value


def profile_loglik_values(values, opts: FitOptions | None = None) -> float:
    """L(Q) for the equally weighted empirical distribution of ``values``.

    Skips the density construction and the certificate; meant for inner
    loops such as the profile likelihood over regression coefficients.
    """
    x = np.sort(np.asarray(values, dtype=float))
    keep = np.empty(x.size, dtype=bool)
    keep[0] = True
    keep[1:] = x[1:] != x[:-1]
    if keep.sum() < 2:
        raise DegenerateSupport("log-concave projection needs at least two distinct atoms")
    starts = np.flatnonzero(keep)
    w = np.diff(np.append(starts, x.size)) / x.size
    return _standardized_fit(x[starts], w, opts or FitOptions(), FitTrace())[3]


def fit(q: EmpiricalDistribution, opts: FitOptions | None = None,
        trace: FitTrace | None = None) -> LogConcaveDensity:
    """Log-concave projection psi(. | Q) of a discrete distribution.

    Raises
    ------
    DegenerateSupport
        If ``q`` has a single atom (L(Q) is then +inf).
    NoConvergence
        If the iteration cap is hit or the final certificate fails.
    """
    opts = opts or FitOptions()
    trace = trace if trace is not None else FitTrace()
    if not q.is_nondegenerate():
        raise DegenerateSupport("log-concave projection needs at least two distinct atoms")
    K, eta, scale, _ = _standardized_fit(q.atoms, q.weights, opts, trace)

    knots = q.atoms[K].copy()
    logvals = eta - math.log(scale)
    psi = normalize(LogConcaveDensity(knots, logvals, raw=True))
    cert = certify(psi, q, opts.certificate_tol)
    trace.certificate = cert
    if not cert.passed:
        raise NoConvergence(f"optimality certificate failed: {cert}")
    return psi


# ---------------------------------------------------------------------------
# certificate

def prefix_integral(psi: LogConcaveDensity, q: EmpiricalDistribution, x) -> np.ndarray:
    """H(x) = int_{-inf}^x (F - G)(t) dt, exact."""
    x = np.asarray(x, dtype=float)
    IF = psi.cdf_integral(x)
    idx = np.searchsorted(q.atoms, x, side="right")
    cw = np.concatenate(([0.0], np.cumsum(q.weights)))
    cwz = np.concatenate(([0.0], np.cumsum(q.weights * q.atoms)))
    IG = x * cw[idx] - cwz[idx]
    return IF - IG


def certify(psi: LogConcaveDensity, q: EmpiricalDistribution, tol: float = 1e-6,
            strictness_tol: float = 1e-7) -> Certificate:
    """Check the distribution-function characterization of optimality.

    H is convex between consecutive points of the merged grid of knots and
    atoms, so its supremum is attained on that grid (or is the limit 0 at
    -inf). The tolerance for the equality at kinks is scaled by
    ``1 + max |H|`` so that it does not depend on the units of the data.
    """
    psi._require_normalized()
    grid = np.union1d(psi.knots, q.atoms)
    H = prefix_integral(psi, q, grid)
    total = q.mean() - psi.mean()
    i_max = int(np.argmax(H))
    max_prefix = max(float(H[i_max]), 0.0, total)
    at = float(grid[i_max]) if H[i_max] >= 0 else -math.inf
    knots = psi.knot_set(strictness_tol)
    knot_H = prefix_integral(psi, q, knots)
    max_knot_abs = float(np.max(np.abs(knot_H)))
    knot_tol = tol * (1.0 + float(np.max(np.abs(H))))
    passed = abs(total) <= tol and max_prefix <= tol and max_knot_abs <= knot_tol
    return Certificate(total_integral=float(total), max_prefix=max_prefix,
                       max_knot_abs=max_knot_abs, tol=tol, passed=bool(passed),
                       max_prefix_at=at, knot_tol=knot_tol)


# ---------------------------------------------------------------------------
# derived quantities

def profile_loglik(q: EmpiricalDistribution, opts: FitOptions | None = None) -> float:
    """L(Q) = max over concave phi of L(phi, Q)."""
    return loglik(fit(q, opts), q)


def loglik_upper_bound(q: EmpiricalDistribution) -> float:
    """-log(2 int |x - Med(Q)| dQ), an upper bound for L(Q)."""
    if not q.is_nondegenerate():
        raise DegenerateSupport("bound undefined for a point mass")
    return -math.log(2.0 * q.mean_abs_dev(q.median()))


def default_test_functions(q: EmpiricalDistribution, n_centers: int = 21):
    """Convex test functions: x^2, |x - c| over quantiles of q, exp of the
    standardized variable. Returned as (name, h) pairs."""
    mu, sd = q.mean(), math.sqrt(q.variance())
    centers = np.unique(q.quantile(np.linspace(0.02, 1.0, n_centers)))
    funcs = [("x^2", lambda x: x * x)]
    funcs += [(f"|x-{c:.6g}|", (lambda c: lambda x: np.abs(x - c))(c)) for c in centers]
    funcs.append(("exp", lambda x: np.exp((x - mu) / sd)))
    return funcs


def convex_order_check(psi: LogConcaveDensity, q: EmpiricalDistribution,
                       test_functions=None) -> float:
    """Largest gap ``int h dP - int h dQ`` over the test functions.

    For the projection P of Q this is <= 0 for every convex h. ``test_functions``
    is an iterable of vectorized callables or ``(name, callable)`` pairs.
    """
    if test_functions is None:
        test_functions = default_test_functions(q)
    gaps = []
    for item in test_functions:
        h = item[1] if isinstance(item, tuple) else item
        gaps.append(psi.expect(h, n_nodes=24, n_sub=8) - q.expect(h))
    return float(max(gaps))

"""Seeded Monte Carlo experiments.

Every replication draws from its own generator, spawned from the master
seed with :class:`numpy.random.SeedSequence`, so results do not depend on
the order in which replications run. With ``threads > 1`` replications are
farmed out to worker processes and reassembled in replication order.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import special, stats

from .density import LogConcaveDensity, from_logpdf, l1_distance, laplace
from .distances import mallows_d1
from .empirical import EmpiricalDistribution, from_samples
from .errors import NoConvergence, PerfectFit
from .project import FitOptions, FitTrace, fit
from .regress import DEOptions, fit_isotonic, fit_linear, linear_design

SCENARIOS = ("linear_gamma", "linear_gauss", "isotonic", "projection_consistency",
             "d1_continuity")

TRUE_INTERCEPT = 1.0
TRUE_SLOPE = 2.0


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def rep_seeds(master: int, reps: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(master).spawn(reps)


# ---------------------------------------------------------------------------
# samplers

def scaled_t2_cdf(x):
    x = np.asarray(x, dtype=float)
    return 0.5 * (1.0 + x / np.sqrt(1.0 + x * x))


def scaled_t2_ppf(u):
    v = 2.0 * np.asarray(u, dtype=float) - 1.0
    with np.errstate(divide="ignore"):
        return v / np.sqrt(1.0 - v * v)


def sampler_scaled_t2(seed, n: int) -> np.ndarray:
    """Student t_2 rescaled to density (1 + x^2)^(-3/2) / 2, by inversion."""
    u = _rng(seed).random(n)
    u[u == 0.0] = 0.5  # u = 0 maps to -inf
    return scaled_t2_ppf(u)


def sampler_centered_gamma(seed, n: int, r: float) -> np.ndarray:
    """Gamma with shape r, standardized to mean 0 and variance 1."""
    if not r > 0:
        raise ValueError("shape must be positive")
    g = _rng(seed).standard_gamma(r, size=n)
    return (g - r) / math.sqrt(r)


def sampler_gaussian_mixture(seed, n: int, w: float = 0.7, m1: float = -1.5,
                             m2: float = 1.5) -> np.ndarray:
    """w N(m1, 1) + (1 - w) N(m2, 1)."""
    if not 0 < w <= 1:
        raise ValueError("w must lie in (0, 1]")
    rng = _rng(seed)
    first = rng.random(n) < w
    z = rng.standard_normal(n)
    return np.where(first, m1, m2) + z


def sampler_laplace(seed, n: int, scale: float = 1.0) -> np.ndarray:
    return _rng(seed).laplace(0.0, scale, size=n)


# ---------------------------------------------------------------------------
# discretized targets
#
# A quantile grid with n atoms puts mass 1/n on the conditional mean of each
# quantile cell [ppf((i-1)/n), ppf(i/n)]. This keeps the mean and the
# integrated distribution function exact at every cell boundary.

def quantile_grid(ppf, partial_mean, n: int) -> EmpiricalDistribution:
    """``partial_mean(x)`` must return int_{-inf}^x t dQ(t)."""
    edges = ppf(np.arange(n + 1) / n)
    pm = partial_mean(edges)
    atoms = n * np.diff(pm)
    return from_samples(atoms)


def t2_grid(n: int = 10_000) -> EmpiricalDistribution:
    def partial_mean(x):
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(np.isinf(x), 0.0, -0.5 / np.sqrt(1.0 + x * x))
    return quantile_grid(scaled_t2_ppf, partial_mean, n)


def normal_grid(n: int = 10_000, loc: float = 0.0, scale: float = 1.0) -> EmpiricalDistribution:
    def partial_mean(x):
        z = (x - loc) / scale
        return np.where(z == np.inf, loc, np.where(z == -np.inf, 0.0,
                        loc * stats.norm.cdf(z) - scale * stats.norm.pdf(z)))
    return quantile_grid(lambda u: stats.norm.ppf(u, loc, scale), partial_mean, n)


def mixture_cdf(x, w=0.7, m1=-1.5, m2=1.5):
    return w * special.ndtr(x - m1) + (1 - w) * special.ndtr(x - m2)


def mixture_logpdf(x, w=0.7, m1=-1.5, m2=1.5):
    return np.logaddexp(math.log(w) + stats.norm.logpdf(x, m1),
                        math.log1p(-w) + stats.norm.logpdf(x, m2))


def mixture_ppf(u, w=0.7, m1=-1.5, m2=1.5):
    u = np.asarray(u, dtype=float)
    lo = np.full(u.shape, min(m1, m2) - 40.0)
    hi = np.full(u.shape, max(m1, m2) + 40.0)
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        below = mixture_cdf(mid, w, m1, m2) < u
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    out = 0.5 * (lo + hi)
    out[u <= 0] = -np.inf
    out[u >= 1] = np.inf
    return out


def mixture_grid(n: int = 10_000, w: float = 0.7, m1: float = -1.5,
                 m2: float = 1.5) -> EmpiricalDistribution:
    def partial_mean(x):
        out = np.zeros_like(x)
        for wj, mj in ((w, m1), (1 - w, m2)):
            z = x - mj
            part = mj * special.ndtr(z) - stats.norm.pdf(z)
            out += wj * np.where(z == np.inf, mj, np.where(z == -np.inf, 0.0, part))
        return out
    return quantile_grid(lambda u: mixture_ppf(u, w, m1, m2), partial_mean, n)


def mixture_antimode(w=0.7, m1=-1.5, m2=1.5) -> float:
    from scipy.optimize import minimize_scalar
    res = minimize_scalar(lambda x: float(mixture_logpdf(x, w, m1, m2)),
                          bounds=(min(m1, m2), max(m1, m2)), method="bounded",
                          options={"xatol": 1e-10})
    return float(res.x)


def true_error_density(scenario: str, shape_r: float = 1.0) -> LogConcaveDensity:
    """Piecewise-linear representation of the error law of a scenario."""
    if scenario == "linear_gauss":
        return from_logpdf(stats.norm.logpdf, np.linspace(-9, 9, 4001))
    if scenario == "linear_gamma":
        if shape_r < 1:
            raise ValueError("gamma error law is not log-concave for shape < 1")
        sr = math.sqrt(shape_r)
        lo, hi = -sr, -sr + (shape_r + 40.0 * sr) / sr
        if shape_r == 1.0:
            return from_logpdf(lambda x: -(x + 1.0), np.array([lo, hi]))
        # log-density is -inf at the left end; start just inside
        grid = lo + np.geomspace(1e-6, hi - lo, 6001)
        return from_logpdf(
            lambda x: stats.gamma.logpdf(sr * x + shape_r, shape_r) + math.log(sr), grid)
    if scenario == "isotonic":
        return laplace(40.0 * ISOTONIC_NOISE_SCALE, ISOTONIC_NOISE_SCALE)
    raise ValueError(f"no error density for scenario {scenario!r}")


ISOTONIC_NOISE_SCALE = 1.0 / math.sqrt(2.0)   # Laplace with variance 1


# ---------------------------------------------------------------------------
# configuration and report

@dataclass(frozen=True)
class SimConfig:
    scenario: str
    n: int = 100
    reps: int = 200
    shape_r: float = 1.0
    seed: int = 0
    sizes: tuple | None = None

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"scenario must be one of {SCENARIOS}")
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if self.n < 3:
            raise ValueError("n must be at least 3")
        if self.sizes is not None:
            object.__setattr__(self, "sizes", tuple(int(s) for s in self.sizes))


@dataclass
class SimReport:
    config: dict
    rmse_mle: float | None = None
    rmse_ls: float | None = None
    per_rep: list = field(default_factory=list)
    distance_trajectory: list = field(default_factory=list)
    skipped: int = 0
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False,
                          default=_json_default)


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _map(func, items, threads: int):
    if threads is None:
        threads = int(os.environ.get("LOGCAVE_THREADS", "1"))
    if threads <= 1 or len(items) <= 1:
        return [func(it) for it in items]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))


def _seed_int(ss: np.random.SeedSequence) -> int:
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def _seed_label(ss: np.random.SeedSequence) -> str:
    return f"{ss.entropy}:{'/'.join(str(k) for k in ss.spawn_key)}"


# ---------------------------------------------------------------------------
# linear regression

def _linear_rep(args):
    scenario, n, shape_r, ss, de_generations = args
    rng = np.random.default_rng(ss)
    x = rng.uniform(0.0, 3.0, size=n)
    if scenario == "linear_gamma":
        eps = sampler_centered_gamma(rng, n, shape_r)
    else:
        eps = rng.standard_normal(n)
    y = TRUE_INTERCEPT + TRUE_SLOPE * x + eps
    X = linear_design(x)
    de = DEOptions(seed=_seed_int(ss), generations=de_generations)
    try:
        res = fit_linear(X, y, de)
    except NoConvergence as exc:
        raise NoConvergence(f"replication seed {_seed_label(ss)}: {exc}") from exc
    if not res.certificate.passed:
        raise NoConvergence(f"replication seed {_seed_label(ss)}: certificate failed")
    theta_ls = np.linalg.lstsq(X, y, rcond=None)[0]
    mu = TRUE_INTERCEPT + TRUE_SLOPE * x
    return {
        "seed": _seed_label(ss),
        "n": n,
        "theta_mle": float(res.theta[1]),
        "theta_ls": float(theta_ls[1]),
        "lambda_hat": res.lambda_hat,
        "mu_error": float(np.mean(np.abs(res.mu_values - mu))),
        "mu_error_ls": float(np.mean(np.abs(X @ theta_ls - mu))),
        "certificate_passed": bool(res.certificate.passed),
        "psi": res.psi.to_dict(),
    }


def run_linear_sim(config: SimConfig, threads: int | None = 1,
                   de_generations: int = 300) -> SimReport:
    """RMSE of the slope for the log-concave MLE against least squares.

    Design points are redrawn from Unif[0, 3] in every replication. With
    ``config.sizes`` set, the same experiment is repeated for every sample
    size and the median errors of the fitted regression function and error
    density are recorded as a trajectory.
    """
    if config.scenario not in ("linear_gamma", "linear_gauss"):
        raise ValueError("run_linear_sim needs a linear scenario")
    report = SimReport(config=asdict(config),
                       notes=["design points redrawn from Unif[0,3] in every replication"])
    sizes = config.sizes or (config.n,)
    truth = true_error_density(config.scenario, config.shape_r)
    seeds = rep_seeds(config.seed, config.reps * len(sizes))
    for si, n in enumerate(sizes):
        chunk = seeds[si * config.reps:(si + 1) * config.reps]
        recs = _map(_linear_rep, [(config.scenario, n, config.shape_r, ss, de_generations)
                                  for ss in chunk], threads)
        for rec in recs:
            psi = LogConcaveDensity.from_dict(rec.pop("psi"))
            rec["density_l1"] = l1_distance(psi, truth)
        err_mle = np.array([r["theta_mle"] - TRUE_SLOPE for r in recs])
        err_ls = np.array([r["theta_ls"] - TRUE_SLOPE for r in recs])
        if n == config.n or len(sizes) == 1:
            report.rmse_mle = float(np.sqrt(np.mean(err_mle ** 2)))
            report.rmse_ls = float(np.sqrt(np.mean(err_ls ** 2)))
        report.per_rep.extend(recs)
        report.distance_trajectory.append({
            "n": n,
            "median_mu_error": float(np.median([r["mu_error"] for r in recs])),
            "median_density_l1": float(np.median([r["density_l1"] for r in recs])),
            "rmse_mle": float(np.sqrt(np.mean(err_mle ** 2))),
            "rmse_ls": float(np.sqrt(np.mean(err_ls ** 2))),
        })
    return report


# ---------------------------------------------------------------------------
# projection consistency

_REFERENCE_CACHE: dict = {}


def mixture_reference(n_grid: int = 100_000) -> tuple[EmpiricalDistribution, LogConcaveDensity]:
    """Quantile grid of the 0.7/0.3 mixture and its projection."""
    if n_grid not in _REFERENCE_CACHE:
        grid = mixture_grid(n_grid)
        _REFERENCE_CACHE[n_grid] = (grid, fit(grid))
    return _REFERENCE_CACHE[n_grid]


def _projection_rep(args):
    ss, sizes, n_grid = args
    grid, f_inf = mixture_reference(n_grid)
    x = sampler_gaussian_mixture(np.random.default_rng(ss), max(sizes))
    out = []
    for n in sizes:
        q = from_samples(x[:n])
        tr = FitTrace()
        psi = fit(q, trace=tr)
        if not tr.certificate.passed:
            raise NoConvergence(f"replication seed {_seed_label(ss)}: certificate failed")
        out.append({"seed": _seed_label(ss), "n": n, "l1": l1_distance(psi, f_inf),
                    "d1": mallows_d1(q, grid), "certificate_passed": True})
    return out


DEFAULT_PROJECTION_SIZES = (50, 200, 800, 3200)


def run_projection_consistency(config: SimConfig, threads: int | None = 1,
                               n_grid: int = 100_000) -> SimReport:
    """L1 error of projections of nested mixture samples against the
    projection of a fine quantile grid, plus the Mallows distance of the
    samples to that grid."""
    if config.scenario not in ("projection_consistency", "d1_continuity"):
        raise ValueError("run_projection_consistency needs a projection scenario")
    sizes = config.sizes or DEFAULT_PROJECTION_SIZES
    report = SimReport(config=asdict(config),
                       notes=[f"reference: projection of a {n_grid}-atom quantile grid",
                              "samples are nested: size n uses the first n draws"])
    mixture_reference(n_grid)
    rows = _map(_projection_rep, [(ss, sizes, n_grid) for ss in rep_seeds(config.seed, config.reps)],
                threads)
    for rec in rows:
        report.per_rep.extend(rec)
    for n in sizes:
        recs = [r for r in report.per_rep if r["n"] == n]
        report.distance_trajectory.append({
            "n": n,
            "median_l1": float(np.median([r["l1"] for r in recs])),
            "median_d1": float(np.median([r["d1"] for r in recs])),
        })
    return report


# ---------------------------------------------------------------------------
# isotonic regression

DEFAULT_ISOTONIC_SIZES = (100, 400, 1600)


def _isotonic_rep(args):
    ss, n = args
    rng = np.random.default_rng(ss)
    x = (np.arange(1, n + 1) - 0.5) / n
    y = x + rng.laplace(0.0, ISOTONIC_NOISE_SCALE, size=n)
    try:
        res = fit_isotonic(x, y)
    except PerfectFit:
        return {"seed": _seed_label(ss), "n": n, "skipped": "PerfectFit"}
    except NoConvergence as exc:
        raise NoConvergence(f"replication seed {_seed_label(ss)}: {exc}") from exc
    if not res.certificate.passed:
        raise NoConvergence(f"replication seed {_seed_label(ss)}: certificate failed")
    truth = true_error_density("isotonic")
    return {"seed": _seed_label(ss), "n": n,
            "mu_error": float(np.mean(np.abs(res.mu_values - x))),
            "density_l1": l1_distance(res.psi, truth),
            "lambda_hat": res.lambda_hat,
            "certificate_passed": True}


def run_isotonic_sim(config: SimConfig, threads: int | None = 1) -> SimReport:
    """mu(x) = x on [0, 1] with Laplace errors of variance one, fixed
    equispaced design."""
    if config.scenario != "isotonic":
        raise ValueError("run_isotonic_sim needs the isotonic scenario")
    sizes = config.sizes or DEFAULT_ISOTONIC_SIZES
    report = SimReport(config=asdict(config))
    seeds = rep_seeds(config.seed, config.reps * len(sizes))
    for si, n in enumerate(sizes):
        chunk = seeds[si * config.reps:(si + 1) * config.reps]
        recs = _map(_isotonic_rep, [(ss, n) for ss in chunk], threads)
        ok = [r for r in recs if "skipped" not in r]
        report.skipped += len(recs) - len(ok)
        report.per_rep.extend(recs)
        report.distance_trajectory.append({
            "n": n,
            "median_mu_error": float(np.median([r["mu_error"] for r in ok])) if ok else None,
            "median_density_l1": float(np.median([r["density_l1"] for r in ok])) if ok else None,
        })
    return report


def run(config: SimConfig, threads: int | None = 1) -> SimReport:
    if config.scenario in ("linear_gamma", "linear_gauss"):
        return run_linear_sim(config, threads)
    if config.scenario == "isotonic":
        return run_isotonic_sim(config, threads)
    return run_projection_consistency(config, threads)

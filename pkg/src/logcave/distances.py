"""Probability metrics between distributions on the line."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .empirical import EmpiricalDistribution
from .errors import NonPositiveR


@dataclass(frozen=True)
class DistanceReport:
    d1: float
    dks: float
    dbl_upper: float
    r_used: float
    dbl_upper_loose: bool

    def to_dict(self) -> dict:
        return asdict(self)


def _merged_cdfs(q: EmpiricalDistribution, q2: EmpiricalDistribution):
    grid = np.union1d(q.atoms, q2.atoms)
    return grid, q.cdf(grid), q2.cdf(grid)


def mallows_d1(q: EmpiricalDistribution, q2: EmpiricalDistribution) -> float:
    """Wasserstein-1 distance, int |G - G'| dx, exact for discrete laws."""
    grid, G, G2 = _merged_cdfs(q, q2)
    return float(np.sum(np.abs(G[:-1] - G2[:-1]) * np.diff(grid)))


def kolmogorov_smirnov(q: EmpiricalDistribution, q2: EmpiricalDistribution) -> float:
    """sup_t |G(t) - G'(t)|; the sup is attained at an atom."""
    _, G, G2 = _merged_cdfs(q, q2)
    return float(np.max(np.abs(G - G2)))


def _outer_mass(q: EmpiricalDistribution, r: float) -> float:
    """Q(R \\ (-r, r])."""
    inside = (q.atoms > -r) & (q.atoms <= r)
    return float(1.0 - np.sum(q.weights[inside]))


def bounded_lipschitz_upper(q: EmpiricalDistribution, q2: EmpiricalDistribution,
                            r: float | str = "auto") -> tuple[float, float]:
    """Upper bound 4 Q(R \\ (-r, r]) + 4 (r + 1) D_KS(Q, Q') on D_BL.

    With ``r="auto"`` the bound is minimized over ``r`` in the set of
    absolute atom values of ``q`` together with 1. Returns ``(bound, r)``.
    """
    dks = kolmogorov_smirnov(q, q2)
    if isinstance(r, str):
        if r != "auto":
            raise ValueError("r must be positive or 'auto'")
        cands = np.unique(np.concatenate((np.abs(q.atoms), [1.0])))
        cands = cands[cands > 0]
        values = [4.0 * _outer_mass(q, c) + 4.0 * (c + 1.0) * dks for c in cands]
        i = int(np.argmin(values))
        return float(values[i]), float(cands[i])
    if not r > 0:
        raise NonPositiveR("r must be positive")
    return 4.0 * _outer_mass(q, r) + 4.0 * (r + 1.0) * dks, float(r)


def bounded_lipschitz_lower(q: EmpiricalDistribution, q2: EmpiricalDistribution,
                            n_functions: int = 50, seed=0) -> float:
    """Lower bound on D_BL from random functions bounded by 1 and 1-Lipschitz.

    Each test function is a clipped piecewise-linear path with slopes in
    [-1, 1] on a grid spanning both supports.
    """
    rng = np.random.default_rng(seed)
    lo = min(q.atoms[0], q2.atoms[0])
    hi = max(q.atoms[-1], q2.atoms[-1])
    if hi == lo:
        return 0.0
    grid = np.linspace(lo, hi, 65)
    step = np.diff(grid)
    best = 0.0
    for _ in range(n_functions):
        slopes = rng.uniform(-1.0, 1.0, size=step.size)
        if rng.random() < 0.5:
            slopes = np.sign(slopes)
        vals = np.concatenate(([rng.uniform(-1, 1)], np.cumsum(slopes * step)))
        vals[1:] += vals[0]
        vals = np.clip(vals, -1.0, 1.0)
        h = lambda x: np.interp(x, grid, vals)
        best = max(best, abs(q.expect(h) - q2.expect(h)))
    return float(best)


def distance_report(q: EmpiricalDistribution, q2: EmpiricalDistribution,
                    r: float | str = "auto") -> DistanceReport:
    bound, r_used = bounded_lipschitz_upper(q, q2, r)
    return DistanceReport(d1=mallows_d1(q, q2), dks=kolmogorov_smirnov(q, q2),
                          dbl_upper=bound, r_used=r_used, dbl_upper_loose=bound > 2.0)

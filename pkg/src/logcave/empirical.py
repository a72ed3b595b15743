"""Weighted discrete distributions on the real line."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyInput, LengthMismatch, NonFiniteValue, NonPositiveWeight, OutOfRange

MIN_WEIGHT = 1e-15
# Cumulative weights come from a float sum; allow this much slack when
# comparing them against a requested probability level.
_CUM_SLACK = 1e-13


@dataclass(frozen=True, eq=False)
class EmpiricalDistribution:
    """Sorted, tie-merged atoms with positive weights summing to one.

    Build instances with :func:`from_samples`; the constructor trusts its
    input.
    """

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.atoms.setflags(write=False)
        self.weights.setflags(write=False)

    def __len__(self):
        return self.atoms.size

    def __repr__(self):
        return f"EmpiricalDistribution(n_atoms={self.atoms.size}, mean={self.mean():.6g})"

    @property
    def cum_weights(self) -> np.ndarray:
        return np.cumsum(self.weights)

    def cdf(self, x):
        """Right-continuous distribution function G(x)."""
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.atoms, x, side="right")
        cw = np.concatenate(([0.0], self.cum_weights))
        cw[-1] = 1.0
        out = cw[idx]
        return out if out.ndim else float(out)

    def quantile(self, u):
        """Generalized inverse inf{x : G(x) >= u} for u in (0, 1]."""
        u = np.asarray(u, dtype=float)
        if np.any(~(u > 0.0)) or np.any(u > 1.0):
            raise OutOfRange("quantile level must lie in (0, 1]")
        idx = np.searchsorted(self.cum_weights, u - _CUM_SLACK, side="left")
        idx = np.minimum(idx, self.atoms.size - 1)
        out = self.atoms[idx]
        return out if out.ndim else float(out)

    def mean(self) -> float:
        return float(np.dot(self.weights, self.atoms))

    def variance(self) -> float:
        c = self.atoms - self.mean()
        return float(np.dot(self.weights, c * c))

    def median(self) -> float:
        """Lower median, ``quantile(0.5)``."""
        return self.quantile(0.5)

    def mean_abs_dev(self, center: float) -> float:
        return float(np.dot(self.weights, np.abs(self.atoms - center)))

    def expect(self, h) -> float:
        return float(np.dot(self.weights, h(self.atoms)))

    def is_nondegenerate(self) -> bool:
        """True iff the convex support has nonempty interior (>= 2 atoms)."""
        return self.atoms.size >= 2

    def affine(self, a: float, b: float) -> EmpiricalDistribution:
        """Law of ``a + b X``."""
        if b == 0:
            return from_samples([a])
        atoms = a + b * self.atoms
        weights = self.weights
        if b < 0:
            atoms, weights = atoms[::-1], weights[::-1]
        return EmpiricalDistribution(np.ascontiguousarray(atoms),
                                     np.ascontiguousarray(weights))

    def shift(self, c: float) -> EmpiricalDistribution:
        return EmpiricalDistribution(self.atoms + c, self.weights.copy())


def from_samples(values, weights=None, tie_tol: float = 0.0) -> EmpiricalDistribution:
    """Build a distribution from (optionally weighted) observations.

    Atoms closer than ``tie_tol`` (chained, after sorting) are merged into
    one atom at their weighted mean. Weights are normalized to sum to one.

    >>> q = from_samples([1.0, 1.0, 2.0])
    >>> q.atoms.tolist(), q.weights.round(4).tolist()
    ([1.0, 2.0], [0.6667, 0.3333])
    """
    x = np.asarray(values, dtype=float).ravel()
    if x.size == 0:
        raise EmptyInput("no values given")
    if not np.all(np.isfinite(x)):
        raise NonFiniteValue("values must be finite")
    if weights is None:
        w = np.ones_like(x)
    else:
        w = np.asarray(weights, dtype=float).ravel()
        if w.shape != x.shape:
            raise LengthMismatch("weights must match values in length")
        if not np.all(np.isfinite(w)):
            raise NonFiniteValue("weights must be finite")
        if np.any(w <= 0):
            raise NonPositiveWeight("weights must be positive")
    order = np.argsort(x, kind="stable")
    x, w = x[order], w[order]
    w = w / w.sum()
    if np.any(w < MIN_WEIGHT):
        raise NonPositiveWeight(f"normalized weight below {MIN_WEIGHT:g}")

    new_group = np.empty(x.size, dtype=bool)
    new_group[0] = True
    new_group[1:] = np.diff(x) > tie_tol
    starts = np.flatnonzero(new_group)
    w_merged = np.add.reduceat(w, starts)
    if tie_tol > 0:
        x_merged = np.add.reduceat(w * x, starts) / w_merged
    else:
        x_merged = x[starts]
    w_merged = w_merged / w_merged.sum()
    return EmpiricalDistribution(x_merged, w_merged)


def convolve(q: EmpiricalDistribution, r: EmpiricalDistribution) -> EmpiricalDistribution:
    """Distribution of X + Y for independent X ~ q, Y ~ r."""
    sums = np.add.outer(q.atoms, r.atoms).ravel()
    prods = np.multiply.outer(q.weights, r.weights).ravel()
    return from_samples(sums, prods)


def mixture(q0: EmpiricalDistribution, q1: EmpiricalDistribution, t: float) -> EmpiricalDistribution:
    """(1 - t) q0 + t q1."""
    if not 0.0 <= t <= 1.0:
        raise OutOfRange("mixing weight must lie in [0, 1]")
    if t == 0.0:
        return q0
    if t == 1.0:
        return q1
    return from_samples(np.concatenate([q0.atoms, q1.atoms]),
                        np.concatenate([(1 - t) * q0.weights, t * q1.weights]))

"""Log-concave densities with piecewise-linear log-density.

A :class:`LogConcaveDensity` stores knots ``t_1 < ... < t_m`` and the values
of ``phi`` there. ``phi`` is linear between knots and ``-inf`` outside
``[t_1, t_m]``. All integrals over segments are computed in closed form with
the helpers in :mod:`logcave._segments`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import _segments as seg
from .errors import NonFiniteMass, NotConcave, NotNormalized, OutOfRange, ZeroScale

CONCAVITY_SLACK = 1e-9
NORMALIZATION_TOL = 1e-8
STRICTNESS_TOL = 1e-7


@dataclass(frozen=True, eq=False)
class LogConcaveDensity:
    """Concave piecewise-linear log-density on a compact interval.

    Parameters
    ----------
    knots : array_like
        Strictly increasing, at least two points.
    logvals : array_like
        Finite values of the log-density at the knots.
    raw : bool
        If False (default) the density must integrate to one within
        ``NORMALIZATION_TOL``. Raw instances may carry any finite mass and
        are accepted by :func:`normalize` and the log-likelihood.
    """

    knots: np.ndarray
    logvals: np.ndarray
    raw: bool = False

    def __post_init__(self):
        t = np.array(self.knots, dtype=float).ravel()
        v = np.array(self.logvals, dtype=float).ravel()
        if t.size < 2 or t.size != v.size:
            raise ValueError("need at least two knots and one value per knot")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise ValueError("knots and log-values must be finite")
        if np.any(np.diff(t) <= 0):
            raise ValueError("knots must be strictly increasing")
        s = np.diff(v) / np.diff(t)
        jumps = np.diff(s)
        if np.any(jumps > CONCAVITY_SLACK * np.maximum(1.0, np.abs(s[1:]))):
            raise NotConcave("log-density slopes must be nonincreasing")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "knots", t)
        object.__setattr__(self, "logvals", v)
        if not self.raw:
            mass = self.mass()
            if not abs(mass - 1.0) <= NORMALIZATION_TOL:
                raise NotNormalized(f"density integrates to {mass!r}, not 1")

    def __repr__(self):
        return (f"LogConcaveDensity(n_knots={self.knots.size}, "
                f"support=[{self.knots[0]:.6g}, {self.knots[-1]:.6g}])")

    # -- basic geometry -------------------------------------------------

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(self.knots)

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.logvals) / self.lengths

    @property
    def support(self) -> tuple[float, float]:
        return float(self.knots[0]), float(self.knots[-1])

    def segment_masses(self) -> np.ndarray:
        return self.lengths * seg.j00(self.logvals[:-1], self.logvals[1:])

    def mass(self) -> float:
        """Integral of exp(phi) over the line."""
        return float(np.sum(self.segment_masses()))

    integrate_exp = mass

    def _require_normalized(self):
        if self.raw:
            mass = self.mass()
            if abs(mass - 1.0) > NORMALIZATION_TOL:
                raise NotNormalized(f"density integrates to {mass!r}, not 1")

    def _locate(self, x):
        """Segment index and offset for points inside the support."""
        k = np.searchsorted(self.knots, x, side="right") - 1
        k = np.clip(k, 0, self.knots.size - 2)
        return k, x - self.knots[k]

    # -- evaluation -----------------------------------------------------

    def eval_log(self, x):
        """phi(x), with -inf outside the support."""
        x = np.asarray(x, dtype=float)
        inside = (x >= self.knots[0]) & (x <= self.knots[-1])
        out = np.full(x.shape, -np.inf)
        if np.any(inside):
            out[inside] = np.interp(x[inside], self.knots, self.logvals)
        return out if out.ndim else float(out)

    def pdf(self, x):
        return np.exp(self.eval_log(x))

    def cdf(self, x):
        self._require_normalized()
        return self._cdf(x)

    def _cum_masses(self):
        cm = np.concatenate(([0.0], np.cumsum(self.segment_masses())))
        return cm / cm[-1]

    def _cdf(self, x):
        x = np.asarray(x, dtype=float)
        cm = self._cum_masses()
        xc = np.clip(x, self.knots[0], self.knots[-1])
        k, u = self._locate(xc)
        a = self.logvals[k]
        s = self.slopes[k]
        part = u * seg.j00(a, a + s * u) / self.mass()
        out = np.clip(cm[k] + part, 0.0, 1.0)
        return out if out.ndim else float(out)

    def quantile(self, u):
        """Inverse distribution function for u in (0, 1)."""
        self._require_normalized()
        u = np.asarray(u, dtype=float)
        if np.any(~((u > 0.0) & (u < 1.0))):
            raise OutOfRange("quantile level must lie in (0, 1)")
        return self._quantile(u)

    def _quantile(self, u):
        u = np.asarray(u, dtype=float)
        cm = self._cum_masses()
        total = self.mass()
        k = np.searchsorted(cm, u, side="right") - 1
        k = np.clip(k, 0, self.knots.size - 2)
        p = (u - cm[k]) * total
        a = self.logvals[k]
        s = self.slopes[k]
        length = self.lengths[k]
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            arg = s * p * np.exp(-a)
            flat = np.abs(arg) < 1e-12
            off = np.where(flat, p * np.exp(-a), np.log1p(arg) / s)
        bad = ~np.isfinite(off) | (off < 0) | (off > length)
        if np.any(bad):
            off = np.where(bad, self._bisect_offsets(k, p, length), off)
        out = self.knots[k] + np.clip(off, 0.0, length)
        return out if out.ndim else float(out)

    def _bisect_offsets(self, k, p, length):
        a = self.logvals[k]
        s = self.slopes[k]
        lo = np.zeros_like(p)
        hi = np.array(length, dtype=float)
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            m = mid * seg.j00(a, a + s * mid)
            below = m < p
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return 0.5 * (lo + hi)

    def sample(self, seed, n: int) -> np.ndarray:
        """n draws by inversion; deterministic given ``seed``."""
        self._require_normalized()
        rng = np.random.default_rng(seed)
        return self._quantile(rng.random(n))

    # -- moments --------------------------------------------------------

    def mean(self) -> float:
        self._require_normalized()
        a, b, L = self.logvals[:-1], self.logvals[1:], self.lengths
        first = self.knots[:-1] * L * seg.j00(a, b) + L * L * seg.j10(b, a)
        return float(np.sum(first) / self.mass())

    def second_moment(self) -> float:
        self._require_normalized()
        a, b, L, t = self.logvals[:-1], self.logvals[1:], self.lengths, self.knots[:-1]
        m0 = L * seg.j00(a, b)
        m1 = L * L * seg.j10(b, a)
        # int_0^1 tau^2 e^{...} = j20 with the roles of a, b swapped
        m2 = L**3 * seg.j20(b, a)
        return float(np.sum(t * t * m0 + 2 * t * m1 + m2) / self.mass())

    def variance(self) -> float:
        mu = self.mean()
        return self.second_moment() - mu * mu

    def cdf_integral(self, x):
        """int_{-inf}^x F(t) dt, i.e. E(x - X)_+."""
        self._require_normalized()
        x = np.asarray(x, dtype=float)
        a, b, L = self.logvals[:-1], self.logvals[1:], self.lengths
        total = self.mass()
        cm = self._cum_masses()
        # integral of F over each full segment: F(t_k) L + L^2 j10(a, b) / mass
        seg_int = cm[:-1] * L + L * L * seg.j10(a, b) / total
        cum_int = np.concatenate(([0.0], np.cumsum(seg_int)))
        xc = np.clip(x, self.knots[0], self.knots[-1])
        k, u = self._locate(xc)
        av = self.logvals[k]
        s = self.slopes[k]
        part = cm[k] * u + u * u * seg.j10(av, av + s * u) / total
        out = cum_int[k] + part + np.maximum(x - self.knots[-1], 0.0)
        return out if out.ndim else float(out)

    def mean_abs_dev(self, center: float) -> float:
        """E|X - center| under the density."""
        return float(2.0 * self.cdf_integral(center) + self.mean() - center)

    def expect(self, h, n_nodes: int = 16, n_sub: int = 4) -> float:
        """Numerical E h(X) via Gauss-Legendre on every segment."""
        self._require_normalized()
        nodes, wts = np.polynomial.legendre.leggauss(n_nodes)
        edges = np.linspace(0.0, 1.0, n_sub + 1)
        tau = ((edges[:-1, None] + edges[1:, None]) / 2
               + (edges[1:, None] - edges[:-1, None]) / 2 * nodes[None, :]).ravel()
        wt = (np.repeat(np.diff(edges), n_nodes) / 2 * np.tile(wts, n_sub))
        x = self.knots[:-1, None] + self.lengths[:, None] * tau[None, :]
        logf = self.logvals[:-1, None] + (self.logvals[1:] - self.logvals[:-1])[:, None] * tau[None, :]
        vals = h(x) * np.exp(logf) * self.lengths[:, None] * wt[None, :]
        return float(np.sum(vals) / self.mass())

    # -- structure ------------------------------------------------------

    def knot_set(self, strictness_tol: float = STRICTNESS_TOL) -> np.ndarray:
        """Points where phi is strictly concave: kinks and both endpoints."""
        drop = -np.diff(self.slopes)
        interior = self.knots[1:-1][drop > strictness_tol]
        return np.concatenate(([self.knots[0]], interior, [self.knots[-1]]))

    # -- serialization --------------------------------------------------

    def to_dict(self) -> dict:
        return {"knots": self.knots.tolist(), "logvals": self.logvals.tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict, raw: bool = False) -> LogConcaveDensity:
        return cls(np.asarray(data["knots"], dtype=float),
                   np.asarray(data["logvals"], dtype=float), raw=raw)

    @classmethod
    def from_json(cls, text: str, raw: bool = False) -> LogConcaveDensity:
        return cls.from_dict(json.loads(text), raw=raw)


def normalize(d: LogConcaveDensity) -> LogConcaveDensity:
    """Shift the log-density so that it integrates to one."""
    mass = d.mass()
    if not (np.isfinite(mass) and mass > 0):
        raise NonFiniteMass(f"cannot normalize a density of mass {mass!r}")
    return LogConcaveDensity(d.knots, d.logvals - math.log(mass))


def affine_transform(d: LogConcaveDensity, a: float, b: float) -> LogConcaveDensity:
    """Density of ``a + b X`` when X has density ``d``."""
    if b == 0:
        raise ZeroScale("scale must be nonzero")
    knots = a + b * d.knots
    logvals = d.logvals - math.log(abs(b))
    if b < 0:
        knots, logvals = knots[::-1], logvals[::-1]
    return LogConcaveDensity(np.ascontiguousarray(knots), np.ascontiguousarray(logvals), raw=d.raw)


def l1_distance(d: LogConcaveDensity, d2: LogConcaveDensity) -> float:
    """int |f - f2| dx, computed exactly.

    On every cell of the merged knot grid both log-densities are linear, so
    ``f - f2`` changes sign at most once; the cell is split there and each
    piece integrated in closed form.
    """
    grid = np.union1d(d.knots, d2.knots)
    lo, hi = grid[:-1], grid[1:]
    total = 0.0
    for dens, other in ((d, d2), (d2, d)):
        # mass of dens on cells that lie outside other's support
        outside = (hi <= other.knots[0]) | (lo >= other.knots[-1])
        inside_dens = (lo >= dens.knots[0]) & (hi <= dens.knots[-1])
        sel = outside & inside_dens
        if np.any(sel):
            total += float(np.sum(_cell_mass(dens, lo[sel], hi[sel])))
    both = ((lo >= d.knots[0]) & (hi <= d.knots[-1])
            & (lo >= d2.knots[0]) & (hi <= d2.knots[-1]))
    if np.any(both):
        lo_b, hi_b = lo[both], hi[both]
        mid = 0.5 * (lo_b + hi_b)
        # linear coefficients of each log-density on the cell
        s1 = (d.eval_log(hi_b) - d.eval_log(lo_b)) / (hi_b - lo_b)
        s2 = (d2.eval_log(hi_b) - d2.eval_log(lo_b)) / (hi_b - lo_b)
        c1 = d.eval_log(mid) - s1 * mid
        c2 = d2.eval_log(mid) - s2 * mid
        with np.errstate(divide="ignore", invalid="ignore"):
            cross = (c2 - c1) / (s1 - s2)
        split = np.isfinite(cross) & (cross > lo_b) & (cross < hi_b)
        cut = np.where(split, cross, hi_b)
        total += float(np.sum(np.abs(_lin_mass(c1, s1, lo_b, cut) - _lin_mass(c2, s2, lo_b, cut))))
        if np.any(split):
            lo_s, hi_s = cross[split], hi_b[split]
            total += float(np.sum(np.abs(_lin_mass(c1[split], s1[split], lo_s, hi_s)
                                         - _lin_mass(c2[split], s2[split], lo_s, hi_s))))
    return total


def _lin_mass(c, s, lo, hi):
    """int_lo^hi exp(c + s x) dx."""
    return (hi - lo) * seg.j00(c + s * lo, c + s * hi)


def _cell_mass(d, lo, hi):
    return (hi - lo) * seg.j00(d.eval_log(lo), d.eval_log(hi))


def uniform(a: float, b: float) -> LogConcaveDensity:
    return LogConcaveDensity([a, b], [-math.log(b - a)] * 2)


def laplace(half_width: float, scale: float = 1.0, loc: float = 0.0) -> LogConcaveDensity:
    """Laplace density ``exp(-|x - loc| / scale) / (2 scale)`` truncated to
    ``loc +/- half_width`` and renormalized."""
    if not (half_width > 0 and scale > 0):
        raise ValueError("half_width and scale must be positive")
    h = half_width / scale
    t = np.array([-h, 0.0, h])
    raw = LogConcaveDensity(t, -np.abs(t) - math.log(2.0), raw=True)
    return affine_transform(normalize(raw), loc, scale)


def from_logpdf(logpdf, grid) -> LogConcaveDensity:
    """Piecewise-linear interpolation of a concave log-density on ``grid``,
    normalized."""
    grid = np.asarray(grid, dtype=float)
    return normalize(LogConcaveDensity(grid, logpdf(grid), raw=True))

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from logcave import _segments
from logcave.density import (LogConcaveDensity, affine_transform, from_logpdf, l1_distance,
                             laplace, normalize, uniform)
from logcave.errors import (NonFiniteMass, NotConcave, NotNormalized, OutOfRange,
                            ZeroScale)



def _quad_mass(knots, logvals):
    f = lambda x: math.exp(np.interp(x, knots, logvals))
    return sum(integrate.quad(f, a, b, epsabs=1e-14, epsrel=1e-13)[0]
               for a, b in zip(knots[:-1], knots[1:]))


def random_concave(rng, m=10):
    knots = np.sort(rng.uniform(-5, 5, m))
    slopes = np.sort(rng.normal(0, 2, m - 1))[::-1]
    logvals = np.concatenate(([0.0], np.cumsum(slopes * np.diff(knots))))
    return LogConcaveDensity(knots, logvals, raw=True)


LAPLACE = laplace(20.0)


class TestSegments:
    @pytest.mark.parametrize("a, b", [(0.0, 0.0), (0.3, 0.3 + 1e-9), (-1.0, 0.5),
                                      (2.0, -3.0), (-40.0, 5.0), (1.0, 1.99)])
    def test_against_quadrature(self, a, b):
        ex = lambda t: math.exp((1 - t) * a + t * b)
        oracle = {
            "j00": integrate.quad(ex, 0, 1, epsrel=1e-14)[0],
            "j10": integrate.quad(lambda t: (1 - t) * ex(t), 0, 1, epsrel=1e-14)[0],
            "j20": integrate.quad(lambda t: (1 - t) ** 2 * ex(t), 0, 1, epsrel=1e-14)[0],
            "j11": integrate.quad(lambda t: t * (1 - t) * ex(t), 0, 1, epsrel=1e-14)[0],
        }
        for name, val in oracle.items():
            got = float(getattr(_segments, name)(a, b))
            assert got == pytest.approx(val, rel=1e-12), name

    def test_expm1_ratio(self):
        assert _segments.expm1_ratio(0.0) == 1.0
        assert _segments.expm1_ratio(1.0) == pytest.approx(math.e - 1)
        assert _segments.expm1_ratio(1e-8) == pytest.approx(1 + 5e-9, rel=1e-15)


class TestConstruction:
    def test_rejects_convex(self):
        with pytest.raises(NotConcave):
            LogConcaveDensity([0, 1, 2], [0, -1, 0], raw=True)

    def test_rejects_unnormalized(self):
        with pytest.raises(NotNormalized):
            LogConcaveDensity([0, 1], [1, 1])

    @pytest.mark.parametrize("knots, logvals", [([0], [0]), ([0, 0], [0, 0]),
                                                ([1, 0], [0, 0]), ([0, 1], [0, np.inf])])
    def test_rejects_bad_knots(self, knots, logvals):
        with pytest.raises(ValueError):
            LogConcaveDensity(knots, logvals, raw=True)

    def test_tolerates_tiny_convexity(self):
        LogConcaveDensity([0, 1, 2], [0, 0, 1e-12], raw=True)


class TestEvalAndMass:
    def test_eval_log(self):
        assert LAPLACE.eval_log(0.0) == pytest.approx(-math.log(2), abs=1e-8)
        assert LAPLACE.eval_log(-21.0) == -np.inf
        assert uniform(0, 1).eval_log(0.5) == 0.0

    def test_mass_closed_forms(self):
        assert LogConcaveDensity([0, 1], [0, 0], raw=True).mass() == 1.0
        assert LogConcaveDensity([0, 1], [0, 1], raw=True).mass() == pytest.approx(math.e - 1,
                                                                                  rel=1e-14)

    def test_tent_against_quadrature(self):
        # peak value that makes the tent a density, found with quad + brentq
        from scipy.optimize import brentq
        c = brentq(lambda c: _quad_mass([-1, 0, 1], [-10, c, -10]) - 1.0, -5, 5, xtol=1e-14)
        d = LogConcaveDensity([-1, 0, 1], [-10, c, -10], raw=True)
        assert d.mass() == pytest.approx(1.0, abs=1e-10)

    def test_random_concave_mass(self, rng):
        for _ in range(5):
            d = random_concave(rng)
            assert d.mass() == pytest.approx(_quad_mass(d.knots, d.logvals), rel=1e-10)
            assert normalize(d).mass() == pytest.approx(1.0, abs=1e-10)

    def test_normalize(self):
        d = normalize(LogConcaveDensity([0, 1], [1, 1], raw=True))
        np.testing.assert_allclose(d.logvals, [0, 0], atol=1e-15)
        again = normalize(LAPLACE)
        np.testing.assert_allclose(again.logvals, LAPLACE.logvals, atol=1e-12)

    def test_normalize_non_finite(self):
        with pytest.raises(NonFiniteMass):
            normalize(LogConcaveDensity([0, 1], [800, 800], raw=True))


class TestDistribution:
    def test_uniform(self):
        d = uniform(0, 1)
        assert d.cdf(0.25) == pytest.approx(0.25)
        assert d.quantile(0.9) == pytest.approx(0.9)
        assert d.mean() == pytest.approx(0.5)

    def test_laplace(self):
        assert LAPLACE.cdf(0.0) == pytest.approx(0.5, abs=1e-12)
        assert LAPLACE.mean() == pytest.approx(0.0, abs=1e-8)
        assert LAPLACE.variance() == pytest.approx(2.0, abs=1e-5)
        # F = f on the left half line
        x = np.array([-5.0, -1.0, -0.1])
        np.testing.assert_allclose(LAPLACE.cdf(x), LAPLACE.pdf(x), atol=1e-8)  # truncation at -20

    def test_exponential_segment_mean(self):
        d = normalize(LogConcaveDensity([0, 1], [0, 1], raw=True))
        # frozen from quad: int_0^1 x e^x dx / (e - 1) = 1 / (e - 1)
        assert d.mean() == pytest.approx(0.5819767068693265, rel=1e-12)
        assert 1 / (math.e - 1) == pytest.approx(0.5819767068693265, rel=1e-14)

    def test_round_trip(self, rng):
        d = normalize(random_concave(rng))
        x = np.linspace(d.knots[0] + 1e-3, d.knots[-1] - 1e-3, 200)
        u = d.cdf(x)
        keep = (u > 1e-12) & (u < 1 - 1e-12)
        np.testing.assert_allclose(d.quantile(u[keep]), x[keep], atol=1e-9)

    @pytest.mark.parametrize("u", [0.0, 1.0, 1.5])
    def test_quantile_range(self, u):
        with pytest.raises(OutOfRange):
            LAPLACE.quantile(u)

    def test_cdf_requires_normalized(self):
        with pytest.raises(NotNormalized):
            LogConcaveDensity([0, 1], [1, 1], raw=True).cdf(0.5)

    def test_sample(self):
        d = laplace(20.0)
        x = d.sample(5, 100_000)
        np.testing.assert_array_equal(x, d.sample(5, 100_000))
        assert abs(x.mean() - d.mean()) <= 5 * math.sqrt(d.variance()) / math.sqrt(x.size)

    def test_moments_against_quadrature(self, rng):
        d = normalize(random_concave(rng))
        f = lambda x, p: x ** p * d.pdf(x)
        pieces = list(zip(d.knots[:-1], d.knots[1:]))
        m1 = sum(integrate.quad(f, a, b, args=(1,), epsrel=1e-13)[0] for a, b in pieces)
        m2 = sum(integrate.quad(f, a, b, args=(2,), epsrel=1e-13)[0] for a, b in pieces)
        assert d.mean() == pytest.approx(m1, rel=1e-9, abs=1e-12)
        assert d.second_moment() == pytest.approx(m2, rel=1e-9)
        c = 0.3
        mad = sum(integrate.quad(lambda x: abs(x - c) * d.pdf(x), a, b, points=[c] if a < c < b else None,
                                 epsrel=1e-12)[0] for a, b in pieces)
        assert d.mean_abs_dev(c) == pytest.approx(mad, rel=1e-8)
        assert d.expect(lambda x: x ** 2) == pytest.approx(m2, rel=1e-10)


class TestKnotSet:
    def test_examples(self):
        np.testing.assert_array_equal(uniform(0, 1).knot_set(), [0, 1])
        np.testing.assert_array_equal(LAPLACE.knot_set(), [-20, 0, 20])
        lin = normalize(LogConcaveDensity([0, 1, 2, 3], [0, 1, 2, 3], raw=True))
        np.testing.assert_array_equal(lin.knot_set(), [0, 3])

    def test_strictness(self):
        d = normalize(LogConcaveDensity([0, 1, 2], [0, 1, 2 - 1e-9], raw=True))
        assert d.knot_set().tolist() == [0, 2]
        assert d.knot_set(strictness_tol=1e-10).tolist() == [0, 1, 2]


class TestAffine:
    def test_identity(self):
        d = affine_transform(LAPLACE, 0.0, 1.0)
        np.testing.assert_array_equal(d.knots, LAPLACE.knots)

    def test_uniform_stretch(self):
        d = affine_transform(uniform(0, 1), 0.0, 2.0)
        np.testing.assert_allclose(d.knots, [0, 2])
        np.testing.assert_allclose(d.logvals, [-math.log(2)] * 2)

    def test_laplace_scale(self):
        d = affine_transform(LAPLACE, 0.0, 3.0)
        x = np.array([-7.0, -1.0, 0.0, 2.0, 10.0])
        np.testing.assert_allclose(d.pdf(x), np.exp(-np.abs(x) / 3) / 6, rtol=1e-8)

    def test_negative_scale_reverses(self, rng):
        d = normalize(random_concave(rng))
        e = affine_transform(d, 1.0, -2.0)
        x = np.linspace(-3, 3, 11)
        np.testing.assert_allclose(e.pdf(1.0 - 2.0 * x), d.pdf(x) / 2.0, rtol=1e-12)

    def test_zero_scale(self):
        with pytest.raises(ZeroScale):
            affine_transform(LAPLACE, 1.0, 0.0)

    @given(st.floats(-10, 10), st.floats(0.1, 10), st.booleans())
    def test_inverse(self, a, b, neg):
        b = -b if neg else b
        d = laplace(5.0, 0.7, 0.2)
        back = affine_transform(affine_transform(d, a, b), -a / b, 1 / b)
        np.testing.assert_allclose(back.knots, d.knots, atol=1e-9)
        np.testing.assert_allclose(back.logvals, d.logvals, atol=1e-9)


class TestL1:
    def test_examples(self):
        assert l1_distance(LAPLACE, LAPLACE) == 0.0
        assert l1_distance(uniform(0, 1), uniform(1, 2)) == pytest.approx(2.0, abs=1e-6)
        assert l1_distance(uniform(0, 1), uniform(0, 2)) == pytest.approx(1.0, abs=1e-6)

    def test_against_quadrature(self, rng):
        d1 = normalize(random_concave(rng))
        d2 = normalize(random_concave(rng))
        pts = np.union1d(d1.knots, d2.knots)
        oracle = sum(integrate.quad(lambda x: abs(d1.pdf(x) - d2.pdf(x)), a, b, limit=200,
                                    epsabs=1e-13)[0] for a, b in zip(pts[:-1], pts[1:]))
        assert l1_distance(d1, d2) == pytest.approx(oracle, abs=1e-9)


class TestSerialization:
    def test_json_round_trip_bit_exact(self, rng):
        d = normalize(random_concave(rng))
        back = LogConcaveDensity.from_json(d.to_json())
        assert back.knots.tobytes() == d.knots.tobytes()
        assert back.logvals.tobytes() == d.logvals.tobytes()

    def test_from_logpdf(self):
        d = from_logpdf(lambda x: -0.5 * x * x, np.linspace(-8, 8, 2001))
        assert d.variance() == pytest.approx(1.0, abs=1e-5)


@given(st.integers(0, 10_000))
def test_normalized_random(seed):
    d = normalize(random_concave(np.random.default_rng(seed), m=6))
    assert d.mass() == pytest.approx(1.0, abs=1e-10)

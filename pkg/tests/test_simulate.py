import math

import numpy as np
import pytest
from scipy import stats

from logcave import simulate
from logcave.errors import NoConvergence, PerfectFit
from logcave.simulate import (SimConfig, mixture_grid, normal_grid, rep_seeds, run,
                              sampler_centered_gamma, sampler_gaussian_mixture,
                              sampler_scaled_t2, scaled_t2_cdf, scaled_t2_ppf, t2_grid,
                              true_error_density)


class TestSamplers:
    def test_t2_symmetry_and_cdf(self):
        assert scaled_t2_ppf(0.5) == 0.0
        assert scaled_t2_cdf(1.0) == pytest.approx(0.5 * (1 + 1 / math.sqrt(2)), abs=1e-15)
        assert scaled_t2_cdf(1.0) == pytest.approx(0.85355, abs=1e-5)

    def test_t2_probability_integral_transform(self):
        n = 10_000
        u = scaled_t2_cdf(sampler_scaled_t2(1, n))
        assert stats.kstest(u, "uniform").statistic <= 1.36 / math.sqrt(n)

    def test_t2_matches_scipy(self):
        # scaled t2 is t_2 / sqrt(2)
        x = np.linspace(-5, 5, 11)
        np.testing.assert_allclose(scaled_t2_cdf(x), stats.t.cdf(x * math.sqrt(2), 2),
                                   atol=1e-14)

    def test_deterministic(self):
        np.testing.assert_array_equal(sampler_scaled_t2(4, 10), sampler_scaled_t2(4, 10))
        np.testing.assert_array_equal(sampler_centered_gamma(4, 10, 2.0),
                                      sampler_centered_gamma(4, 10, 2.0))

    def test_gamma_moments(self):
        n = 100_000
        for r in (0.5, 1.0, 3.0):
            x = sampler_centered_gamma(2, n, r)
            assert abs(x.mean()) <= 4 / math.sqrt(n)
            assert abs(x.var() - 1) <= 0.1
        assert stats.skew(sampler_centered_gamma(2, n, 1.0)) > 0

    def test_mixture(self):
        n = 100_000
        x = sampler_gaussian_mixture(3, n)
        assert abs(x.mean() + 0.6) <= 4 * x.std() / math.sqrt(n)
        first = np.random.default_rng(3).random(n) < 0.7
        assert abs(first.mean() - 0.7) <= 4 * math.sqrt(0.21 / n)
        y = sampler_gaussian_mixture(3, n, w=1.0, m1=2.0)
        assert abs(y.mean() - 2.0) <= 4 / math.sqrt(n)
        assert abs(y.std() - 1.0) <= 0.02

    def test_mixture_invalid(self):
        with pytest.raises(ValueError):
            sampler_gaussian_mixture(0, 10, w=0.0)


class TestGrids:
    def test_t2(self):
        q = t2_grid(2000)
        assert len(q) == 2000
        assert abs(q.mean()) <= 1e-12

    def test_normal_cell_means(self):
        q = normal_grid(4000, 1.0, 2.0)
        assert q.mean() == pytest.approx(1.0, abs=1e-12)
        # cell-mean atoms are less spread than the law
        assert 3.9 < q.variance() < 4.0

    def test_mixture(self):
        q = mixture_grid(5000)
        assert q.mean() == pytest.approx(-0.6, abs=1e-10)
        u = (np.arange(5000) + 0.5) / 5000
        np.testing.assert_allclose(simulate.mixture_cdf(simulate.mixture_ppf(u)), u, atol=1e-12)

    def test_true_error_densities_standardized(self):
        for scen, r in (("linear_gauss", 1.0), ("linear_gamma", 1.0), ("linear_gamma", 3.0),
                        ("isotonic", 1.0)):
            d = true_error_density(scen, r)
            assert d.mean() == pytest.approx(0.0, abs=1e-6)
            assert d.variance() == pytest.approx(1.0, abs=1e-4)


class TestConfig:
    @pytest.mark.parametrize("kwargs", [dict(scenario="bogus"), dict(scenario="isotonic", reps=0),
                                        dict(scenario="isotonic", n=2)])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            SimConfig(**kwargs)

    def test_seeds_independent_of_count(self):
        a = rep_seeds(5, 3)
        b = rep_seeds(5, 10)
        for s, t in zip(a, b):
            assert s.generate_state(2).tolist() == t.generate_state(2).tolist()


class TestRuns:
    def test_linear_reproducible(self):
        cfg = SimConfig("linear_gamma", n=40, reps=3, seed=7)
        a, b = run(cfg), run(cfg)
        assert a.to_json() == b.to_json()
        assert a.rmse_mle >= 0 and a.rmse_ls >= 0
        assert all(r["certificate_passed"] for r in a.per_rep)
        assert "redrawn" in a.notes[0]

    def test_parallel_matches_sequential(self):
        cfg = SimConfig("linear_gauss", n=30, reps=4, seed=3)
        assert run(cfg, threads=1).to_json() == run(cfg, threads=2).to_json()

    def test_projection(self):
        rep = run(SimConfig("d1_continuity", reps=2, seed=1, sizes=(50, 400)), )
        assert [t["n"] for t in rep.distance_trajectory] == [50, 400]
        assert len(rep.per_rep) == 4

    def test_isotonic_skips_perfect_fit(self, monkeypatch):
        calls = {"n": 0}
        real = simulate.fit_isotonic

        def flaky(x, y):
            calls["n"] += 1
            if calls["n"] == 2:
                raise PerfectFit("monotone data")
            return real(x, y)

        monkeypatch.setattr(simulate, "fit_isotonic", flaky)
        rep = run(SimConfig("isotonic", reps=3, seed=2, sizes=(50,)))
        assert rep.skipped == 1
        assert sum("skipped" in r for r in rep.per_rep) == 1

    def test_failure_reports_seed(self, monkeypatch):
        def broken(*a, **k):
            raise NoConvergence("boom")

        monkeypatch.setattr(simulate, "fit_linear", broken)
        with pytest.raises(NoConvergence, match="replication seed 11:"):
            run(SimConfig("linear_gamma", n=20, reps=1, seed=11))

    def test_wrong_scenario(self):
        with pytest.raises(ValueError):
            simulate.run_linear_sim(SimConfig("isotonic"))


def test_gaussian_errors_near_efficient():
    # Least squares is the exact MLE under Gaussian errors; the log-concave
    # estimator should lose little against it.
    rep = run(SimConfig("linear_gauss", n=100, reps=100, seed=1))
    ratio = rep.rmse_mle / rep.rmse_ls
    assert ratio <= 1.25, f"rmse ratio {ratio:.3f}"

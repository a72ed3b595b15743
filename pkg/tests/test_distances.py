import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import linear_sum_assignment

from logcave.distances import (bounded_lipschitz_lower, bounded_lipschitz_upper,
                               distance_report, kolmogorov_smirnov, mallows_d1)
from logcave.empirical import from_samples
from logcave.errors import NonPositiveR
from logcave.simulate import sampler_gaussian_mixture

finite = st.floats(-100, 100, allow_nan=False)
samples = st.lists(finite, min_size=1, max_size=20)


def assignment_d1(x, y):
    cost = np.abs(np.subtract.outer(x, y))
    r, c = linear_sum_assignment(cost)
    return cost[r, c].mean()


def test_d1_examples(rng):
    q = from_samples(rng.normal(size=10))
    assert mallows_d1(q, q) == 0.0
    assert mallows_d1(from_samples([0.0]), from_samples([-2.5])) == 2.5


def test_d1_assignment_oracle(rng):
    for n in range(1, 9):
        x, y = rng.normal(size=n), rng.normal(1, 2, size=n)
        assert mallows_d1(from_samples(x), from_samples(y)) == pytest.approx(
            assignment_d1(x, y), abs=1e-12)


def test_d1_sorted_difference_exact(rng):
    x, y = rng.normal(size=200), rng.exponential(size=200)
    q, q2 = from_samples(x), from_samples(y)
    oracle = np.mean(np.abs(np.sort(x) - np.sort(y)))
    assert mallows_d1(q, q2) == pytest.approx(oracle, rel=1e-12)


def test_ks_examples():
    q = from_samples([0.0, 1.0])
    assert kolmogorov_smirnov(q, q) == 0.0
    assert kolmogorov_smirnov(from_samples([0.0]), from_samples([1.0])) == 1.0
    assert kolmogorov_smirnov(q, from_samples([0.0])) == 0.5


def test_bl_examples():
    q = from_samples([-0.5, 0.5, 1.0])
    assert bounded_lipschitz_upper(q, q, 2.0)[0] == 0.0
    bound, r = bounded_lipschitz_upper(from_samples([0.0]), from_samples([1.0]), 2.0)
    assert (bound, r) == (12.0, 2.0)
    rep = distance_report(from_samples([0.0]), from_samples([1.0]), 2.0)
    assert rep.dbl_upper_loose


@pytest.mark.parametrize("r", [0.0, -1.0])
def test_bl_nonpositive_r(r):
    with pytest.raises(NonPositiveR):
        bounded_lipschitz_upper(from_samples([0.0]), from_samples([1.0]), r)


def test_bl_auto_is_minimum(rng):
    q = from_samples(rng.normal(size=30))
    q2 = from_samples(rng.normal(0.3, 1, size=30))
    bound, r = bounded_lipschitz_upper(q, q2)
    for c in np.concatenate((np.abs(q.atoms), [1.0])):
        assert bound <= bounded_lipschitz_upper(q, q2, c)[0] + 1e-15


def test_bl_dominates_lower_bound():
    for seed in range(10):
        q = from_samples(sampler_gaussian_mixture(seed, 200))
        q2 = from_samples(sampler_gaussian_mixture(seed + 100, 200))
        upper, _ = bounded_lipschitz_upper(q, q2)
        assert upper >= bounded_lipschitz_lower(q, q2, 50, seed)


def test_lower_bound_functions_are_admissible(rng):
    # the lower bound never exceeds D1 (1-Lipschitz) nor 2 (bounded by 1)
    q = from_samples(rng.normal(size=50))
    q2 = from_samples(rng.normal(2, 1, size=50))
    lb = bounded_lipschitz_lower(q, q2, 100, 1)
    assert 0 <= lb <= min(2.0, mallows_d1(q, q2)) + 1e-12


@given(samples, samples)
def test_symmetry_and_range(a, b):
    qa, qb = from_samples(a), from_samples(b)
    assert mallows_d1(qa, qb) == pytest.approx(mallows_d1(qb, qa), abs=1e-10)
    assert kolmogorov_smirnov(qa, qb) == kolmogorov_smirnov(qb, qa)
    assert 0 <= kolmogorov_smirnov(qa, qb) <= 1


@given(samples, samples, samples)
def test_triangle(a, b, c):
    qa, qb, qc = from_samples(a), from_samples(b), from_samples(c)
    assert mallows_d1(qa, qc) <= mallows_d1(qa, qb) + mallows_d1(qb, qc) + 1e-10


@given(samples, samples, st.floats(-50, 50))
def test_translation_invariance(a, b, c):
    qa, qb = from_samples(a), from_samples(b)
    scale = 1 + max(map(abs, a + b)) + abs(c)
    assert mallows_d1(qa.shift(c), qb.shift(c)) == pytest.approx(
        mallows_d1(qa, qb), abs=1e-12 * scale * max(len(a), len(b)))

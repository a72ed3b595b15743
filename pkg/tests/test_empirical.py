import numpy as np
import pytest
from hypothesis import given, strategies as st

from logcave.empirical import EmpiricalDistribution, convolve, from_samples, mixture
from logcave.errors import (EmptyInput, LengthMismatch, NonFiniteValue, NonPositiveWeight,
                            OutOfRange)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
samples = st.lists(finite, min_size=1, max_size=30)


def two_point():
    return from_samples([0.0, 1.0])


def test_tie_merging():
    q = from_samples([1.0, 1.0, 2.0])
    np.testing.assert_array_equal(q.atoms, [1.0, 2.0])
    np.testing.assert_allclose(q.weights, [2 / 3, 1 / 3], rtol=1e-15)


def test_singleton():
    q = from_samples([3.0])
    assert q.atoms.tolist() == [3.0] and q.weights.tolist() == [1.0]
    assert not q.is_nondegenerate()


def test_weight_normalization():
    q = from_samples([0, 1, 2], [1, 1, 2])
    np.testing.assert_allclose(q.weights, [0.25, 0.25, 0.5])


def test_unsorted_input_is_sorted():
    q = from_samples([2.0, -1.0, 0.5], [1, 2, 3])
    np.testing.assert_array_equal(q.atoms, [-1.0, 0.5, 2.0])
    np.testing.assert_allclose(q.weights, [2 / 6, 3 / 6, 1 / 6])


def test_tie_tol_merges_chains_at_weighted_mean():
    q = from_samples([0.0, 1e-9, 2e-9, 1.0], [1, 1, 2, 4], tie_tol=1.5e-9)
    assert len(q) == 2
    assert q.atoms[0] == pytest.approx((0 + 1e-9 + 4e-9) / 4, abs=1e-20)
    np.testing.assert_allclose(q.weights, [0.5, 0.5])


@pytest.mark.parametrize("values, weights, err", [
    ([], None, EmptyInput),
    ([1.0, np.nan], None, NonFiniteValue),
    ([1.0, np.inf], None, NonFiniteValue),
    ([1.0, 2.0], [1.0, 0.0], NonPositiveWeight),
    ([1.0, 2.0], [1.0, -1.0], NonPositiveWeight),
    ([1.0, 2.0], [1.0, 1e-17], NonPositiveWeight),
    ([1.0, 2.0], [1.0], LengthMismatch),
])
def test_from_samples_errors(values, weights, err):
    with pytest.raises(err):
        from_samples(values, weights)


def test_cdf_right_continuous():
    q = two_point()
    assert q.cdf(0.0) == 0.5
    assert q.cdf(-1.0) == 0.0
    assert q.cdf(1.0) == 1.0
    np.testing.assert_allclose(q.cdf([-0.5, 0.0, 0.5, 2.0]), [0, 0.5, 0.5, 1])


def test_quantile():
    q = two_point()
    assert q.quantile(0.5) == 0.0
    assert q.quantile(0.75) == 1.0
    assert q.quantile(1.0) == 1.0
    assert from_samples([-1, 0, 3], [0.25, 0.25, 0.5]).quantile(0.5) == 0.0


@pytest.mark.parametrize("u", [0.0, -0.1, 1.0001, np.nan])
def test_quantile_out_of_range(u):
    with pytest.raises(OutOfRange):
        two_point().quantile(u)


def test_moments_and_median():
    q = from_samples([-1.0, 1.0])
    assert q.mean() == 0.0
    assert q.mean_abs_dev(0.0) == 1.0
    assert from_samples([0.0, 1.0, 2.0]).median() == 1.0
    assert two_point().mean_abs_dev(0.0) == 0.5
    assert two_point().variance() == pytest.approx(0.25)


def test_convolution_examples():
    q = from_samples([0.0, 1.0, 5.0], [1, 2, 3])
    shifted = convolve(q, from_samples([2.5]))
    np.testing.assert_allclose(shifted.atoms, q.atoms + 2.5)
    np.testing.assert_allclose(shifted.weights, q.weights)
    c = convolve(two_point(), two_point())
    np.testing.assert_array_equal(c.atoms, [0, 1, 2])
    np.testing.assert_allclose(c.weights, [0.25, 0.5, 0.25])


def test_convolution_against_enumeration(rng):
    a = from_samples(rng.normal(size=5), rng.uniform(0.1, 1, 5))
    b = from_samples(rng.normal(size=3), rng.uniform(0.1, 1, 3))
    c = convolve(a, b)
    # brute-force enumeration of all pairs
    pairs = {}
    for xa, wa in zip(a.atoms, a.weights):
        for xb, wb in zip(b.atoms, b.weights):
            pairs[xa + xb] = pairs.get(xa + xb, 0.0) + wa * wb
    keys = sorted(pairs)
    assert len(c) <= 15
    np.testing.assert_allclose(c.atoms, keys)
    np.testing.assert_allclose(c.weights, [pairs[k] for k in keys])
    assert c.weights.sum() == pytest.approx(1.0, abs=1e-12)


def test_nondegeneracy():
    assert not from_samples([3.0]).is_nondegenerate()
    assert two_point().is_nondegenerate()
    assert not from_samples([2.0, 2.0, 2.0]).is_nondegenerate()


def test_mixture():
    m = mixture(from_samples([0.0]), from_samples([1.0]), 0.25)
    np.testing.assert_allclose(m.weights, [0.75, 0.25])


def test_immutable():
    q = two_point()
    with pytest.raises(ValueError):
        q.atoms[0] = 5.0


@given(samples, st.floats(1e-6, 1.0))
def test_quantile_cdf_galois(values, u):
    q = from_samples(values)
    assert q.cdf(q.quantile(u)) >= u - 1e-12
    for x in q.atoms:
        assert q.quantile(q.cdf(x)) <= x


@given(samples, samples)
def test_convolution_mean_additive(a, b):
    qa, qb = from_samples(a), from_samples(b)
    scale = 1.0 + max(abs(qa.mean()), abs(qb.mean()))
    assert convolve(qa, qb).mean() == pytest.approx(qa.mean() + qb.mean(), abs=1e-10 * scale)


@given(samples)
def test_median_minimizes_l1(values):
    q = from_samples(values)
    best = q.mean_abs_dev(q.median())
    for c in np.linspace(q.atoms[0] - 1, q.atoms[-1] + 1, 41):
        assert best <= q.mean_abs_dev(c) + 1e-9


@given(samples)
def test_weights_normalized(values):
    q = from_samples(values)
    assert np.all(np.diff(q.atoms) > 0)
    assert abs(q.weights.sum() - 1.0) <= 1e-12

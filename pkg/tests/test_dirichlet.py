from __future__ import annotations

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import digamma, polygamma

from dirsbm import dirichlet


def _mp_log_density(x, alpha):
    with mp.workdps(50):
        a = [mp.mpf(v) for v in alpha]
        xs = [mp.mpf(v) for v in x]
        val = mp.loggamma(mp.fsum(a)) - mp.fsum(mp.loggamma(v) for v in a)
        val += mp.fsum((ai - 1) * mp.log(xi) for ai, xi in zip(a, xs))
        return float(val)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 12), st.integers(0, 2**32 - 1))
def test_log_density_matches_high_precision(d, seed):
    rng = np.random.default_rng(seed)
    alpha = rng.uniform(0.05, 30.0, d)
    x = rng.dirichlet(np.ones(d))
    x = np.maximum(x, 1e-12)
    x /= x.sum()
    got = dirichlet.log_density(x, alpha)
    want = _mp_log_density(x, alpha)
    assert got == pytest.approx(want, rel=1e-10, abs=1e-9)


def test_log_density_uniform_case():
    # Dir(1,...,1) on d parts has constant density (d-1)!
    assert dirichlet.log_density([0.2, 0.3, 0.5], [1, 1, 1]) == pytest.approx(np.log(2.0))


@pytest.mark.parametrize(
    "x, alpha",
    [([0.5, 0.5], [1, 1, 1]), ([0.5, 0.6], [1, 1]), ([0.0, 1.0], [1, 1]), ([0.5, 0.5], [1, -1]), ([1.0], [1.0])],
)
def test_log_density_rejects_invalid(x, alpha):
    with pytest.raises(ValueError):
        dirichlet.log_density(x, alpha)


@pytest.mark.parametrize("alpha", [[0.5, 1.5, 3.0], [0.05, 0.2, 0.1, 2.0], [5.0, 5.0]])
def test_sampler_moments(alpha):
    alpha = np.array(alpha)
    m = 40_000
    x = dirichlet.sample(alpha, rng_seed=7, size=m)
    a0 = alpha.sum()
    mean = alpha / a0
    var = alpha * (a0 - alpha) / (a0**2 * (a0 + 1))
    np.testing.assert_allclose(x.sum(axis=1), 1.0, atol=1e-12)
    assert np.all(np.abs(x.mean(axis=0) - mean) < 5 * np.sqrt(var / m))
    # sample variance standard error is bounded by sqrt(E[(x-mu)^4]/m) <= sqrt(var/m) for x in [0,1]
    assert np.all(np.abs(x.var(axis=0) - var) < 5 * np.sqrt(var / m) + 1e-4)


@pytest.mark.parametrize("shape", [0.01, 0.3, 0.999, 1.0, 4.0])
def test_log_gamma_mean_is_digamma(shape):
    m = 50_000
    lg = dirichlet.log_standard_gamma(np.full(m, shape), np.random.default_rng(3))
    se = np.sqrt(polygamma(1, shape) / m)
    assert abs(lg.mean() - digamma(shape)) < 5 * se
    assert np.all(np.isfinite(lg))


def test_sample_is_reproducible():
    a = dirichlet.sample([0.3, 0.4, 2.0], rng_seed=11, size=5)
    b = dirichlet.sample([0.3, 0.4, 2.0], rng_seed=11, size=5)
    np.testing.assert_array_equal(a, b)
    assert dirichlet.sample([1, 1], rng_seed=np.random.default_rng(1)).shape == (2,)


def test_tiny_shapes_stay_strictly_positive():
    x = dirichlet.sample(np.full(50, 1e-3), rng_seed=0, size=200)
    assert np.all(x > 0)
    np.testing.assert_allclose(x.sum(axis=1), 1.0, atol=1e-12)


def test_aggregation_property():
    alpha = np.array([0.4, 1.1, 0.7, 2.5, 0.3])
    groups = [[0, 3], [1], [2, 4]]
    agg_alpha = dirichlet.aggregate_alpha(alpha, groups)
    np.testing.assert_allclose(agg_alpha, [2.9, 1.1, 1.0])
    m = 40_000
    y = dirichlet.aggregate_parts(dirichlet.sample(alpha, rng_seed=5, size=m), groups)
    mean = agg_alpha / agg_alpha.sum()
    var = mean * (1 - mean) / (agg_alpha.sum() + 1)
    assert np.all(np.abs(y.mean(axis=0) - mean) < 5 * np.sqrt(var / m))
    assert np.all(np.abs(y.var(axis=0) - var) < 5 * np.sqrt(var / m) + 1e-4)


def test_aggregate_single_group_is_one():
    np.testing.assert_allclose(dirichlet.aggregate_parts([0.2, 0.3, 0.5], [[0, 1, 2]]), [1.0])


@pytest.mark.parametrize("groups", [[[0, 1]], [[0, 1], [1, 2]], [[0], [1], [2], [3]]])
def test_aggregation_requires_partition(groups):
    with pytest.raises(ValueError):
        dirichlet.aggregate_parts([0.2, 0.3, 0.5], groups)

from __future__ import annotations

import numpy as np
import pytest

from dirsbm.baselines import (
    bernoulli_complete_loglik,
    bernoulli_m_step,
    canonical_labels,
    clr_gaussian_pipeline,
    fit_bernoulli_sbm,
    fit_gaussian_sbm,
    gaussian_complete_loglik,
    gaussian_m_step,
    threshold_at_mean,
    SIGMA2_FLOOR,
)
from dirsbm.inference import one_hot
from dirsbm.metrics import adjusted_rand_index
from dirsbm.network import CompositionMatrix, clr_transform
from dirsbm.simulation import SimConfig, preset, simulate_dirsbm


def _block_matrix(labels, values):
    u = np.asarray(values)[labels][:, labels].astype(float)
    np.fill_diagonal(u, 0.0)
    return u


def test_gaussian_m_step_matches_direct_summation(rng):
    n, K = 9, 3
    u = rng.normal(size=(n, n))
    W = rng.dirichlet(np.ones(K), size=n)
    p = gaussian_m_step(u, W)
    mu = np.zeros((K, K))
    wsum = np.zeros((K, K))
    for i in range(n):
        for j in range(n):
            if i != j:
                w = np.outer(W[i], W[j])
                mu += w * u[i, j]
                wsum += w
    mu /= wsum
    np.testing.assert_allclose(p.mu, mu, rtol=1e-12)
    s2 = sum(np.sum(np.outer(W[i], W[j]) * (u[i, j] - mu) ** 2) for i in range(n) for j in range(n) if i != j)
    assert p.sigma2 == pytest.approx(s2 / wsum.sum(), rel=1e-10)
    np.testing.assert_allclose(p.theta, W.mean(axis=0))


def test_gaussian_k1_is_pooled_statistics(rng):
    u = rng.normal(2.0, 3.0, size=(10, 10))
    labels, p = fit_gaussian_sbm(u, 1, seed=0)
    off = u[~np.eye(10, dtype=bool)]
    assert np.all(labels == 0)
    assert p.mu[0, 0] == pytest.approx(off.mean())
    assert p.sigma2 == pytest.approx(off.var())


def test_gaussian_noiseless_blocks():
    truth = np.repeat([0, 1], 10)
    u = _block_matrix(truth, [[0.3, 0.1], [0.1, 0.3]])
    labels, p = fit_gaussian_sbm(u, 2, seed=1)
    assert adjusted_rand_index(labels, truth) == 1.0
    assert sorted(np.unique(np.round(p.mu, 12))) == [0.1, 0.3]
    assert p.sigma2 == SIGMA2_FLOOR


def test_gaussian_recovers_separated_blocks():
    aris = []
    for seed in range(20):
        rng = np.random.default_rng(seed)
        truth = rng.integers(0, 3, 100)
        means = np.array([[2.0, 0.0, -1.0], [0.5, 2.5, 0.0], [-1.0, 1.0, 2.0]])
        u = means[truth][:, truth] + rng.normal(size=(100, 100))
        labels, _ = fit_gaussian_sbm(u, 3, seed=seed)
        aris.append(adjusted_rand_index(labels, truth))
    assert np.median(aris) >= 0.9


def test_bernoulli_noiseless_planted_partition():
    truth = np.repeat([0, 1], 8)
    adj = _block_matrix(truth, [[1, 0], [0, 1]])
    labels, p = fit_bernoulli_sbm(adj, 2, seed=0)
    assert adjusted_rand_index(labels, truth) == 1.0
    # 8*7 within pairs, 64 between pairs
    within, between = 56.5 / 57.0, 0.5 / 65.0
    np.testing.assert_allclose(np.sort(p.pi.ravel()), [between, between, within, within])


def test_bernoulli_k1_is_smoothed_density(rng):
    adj = (rng.random((12, 12)) < 0.3).astype(float)
    np.fill_diagonal(adj, 0)
    _, p = fit_bernoulli_sbm(adj, 1)
    assert p.pi[0, 0] == pytest.approx((adj.sum() + 0.5) / (132 + 1))


def test_bernoulli_planted_partition_recovery():
    aris = []
    for seed in range(20):
        rng = np.random.default_rng(seed)
        truth = rng.integers(0, 2, 100)
        prob = np.where(truth[:, None] == truth[None, :], 0.8, 0.2)
        adj = (rng.random((100, 100)) < prob).astype(float)
        labels, _ = fit_bernoulli_sbm(adj, 2, seed=seed)
        aris.append(adjusted_rand_index(labels, truth))
    assert np.median(aris) >= 0.9


def test_bernoulli_probabilities_stay_inside_unit_interval(rng):
    for adj in (np.ones((6, 6)), np.zeros((6, 6))):
        W = rng.dirichlet(np.ones(2), size=6)
        p = bernoulli_m_step(adj, W)
        assert np.all((p.pi > 0) & (p.pi < 1))


def test_bernoulli_rejects_non_binary():
    with pytest.raises(ValueError):
        fit_bernoulli_sbm(np.full((4, 4), 0.5), 2)


@pytest.mark.parametrize("which", ["gauss", "bern"])
def test_baseline_likelihoods_are_permutation_invariant(rng, which):
    n, K = 12, 3
    labels = rng.integers(0, K, n)
    perm = np.array([2, 0, 1])
    inverse = np.argsort(perm)
    if which == "gauss":
        u = rng.normal(size=(n, n))
        p = gaussian_m_step(u, one_hot(labels, K))
        q = gaussian_m_step(u, one_hot(inverse[labels], K))
        a = gaussian_complete_loglik(u, labels, p)
        b = gaussian_complete_loglik(u, inverse[labels], q)
    else:
        u = (rng.random((n, n)) < 0.4).astype(float)
        p = bernoulli_m_step(u, one_hot(labels, K))
        q = bernoulli_m_step(u, one_hot(inverse[labels], K))
        a = bernoulli_complete_loglik(u, labels, p)
        b = bernoulli_complete_loglik(u, inverse[labels], q)
    assert a == pytest.approx(b, rel=1e-12)


def test_canonical_labels():
    lab, perm = canonical_labels(np.array([2, 2, 0, 1, 0]))
    np.testing.assert_array_equal(lab, [0, 0, 1, 2, 1])
    np.testing.assert_array_equal(perm, [2, 0, 1])


def test_clr_pipeline_equals_manual_composition():
    comp, _ = simulate_dirsbm(SimConfig(n=40, A=preset(2, "low"), seed=4))
    manual, _ = fit_gaussian_sbm(clr_transform(comp).u, 2, seed=3)
    np.testing.assert_array_equal(clr_gaussian_pipeline(comp, 2, seed=3), manual)


def test_clr_pipeline_equal_rows_degenerate():
    x = np.full((5, 5), 0.25)
    np.fill_diagonal(x, 0)
    labels, p = fit_gaussian_sbm(clr_transform(CompositionMatrix(x)).u, 1)
    assert p.mu[0, 0] == pytest.approx(0.0, abs=1e-15)
    assert np.all(clr_gaussian_pipeline(CompositionMatrix(x), 1) == 0)


def test_clr_pipeline_competitive_for_two_clusters():
    aris = []
    for seed in range(20):
        comp, truth = simulate_dirsbm(SimConfig(n=100, A=preset(2, "low"), seed=100 + seed))
        aris.append(adjusted_rand_index(clr_gaussian_pipeline(comp, 2, seed=seed), truth))
    assert np.median(aris) >= 0.8


def test_threshold_at_mean():
    x = np.array([[0, 0.1, 0.9], [0.6, 0, 0.4], [0.3, 0.7, 0]])
    adj = threshold_at_mean(CompositionMatrix(x))
    np.testing.assert_array_equal(adj, [[0, 0, 1], [1, 0, 0], [0, 1, 0]])

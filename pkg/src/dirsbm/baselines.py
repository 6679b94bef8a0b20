"""Competitor SBMs fitted by classification EM.

Both models have a per-edge log-likelihood that is linear in the edge
value once the block parameters are fixed:

* Gaussian (shared variance): ``u * mu/s2 - mu**2 / (2 s2)`` plus a term free of labels
* Bernoulli: ``u * logit(pi) + log(1 - pi)``

so the C-step is an ICM sweep over :func:`dirsbm.kernels.linear_icm_sweep`.
Each fit alternates M-step and C-step until the labels stop changing,
over several random starts; the start with the highest complete-data
log-likelihood wins. Labels are 0-based.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import kernels
from .inference import FitError, one_hot, random_partition
from .network import CompositionMatrix, clr_transform

log = logging.getLogger(__name__)

SIGMA2_FLOOR = 1e-10
SMOOTH_SUCCESS = 0.5
SMOOTH_FAILURE = 0.5
DEFAULT_STARTS = 5
MAX_ITERS = 100


@dataclass(frozen=True, eq=False)
class GaussianSbmParams:
    mu: np.ndarray
    sigma2: float
    theta: np.ndarray
    loglik: float = float("nan")

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive")
        if abs(np.sum(self.theta) - 1.0) > 1e-10:
            raise ValueError("theta must sum to one")

    @property
    def K(self) -> int:
        return self.mu.shape[0]

    def linear_form(self) -> tuple[np.ndarray, np.ndarray]:
        return self.mu / self.sigma2, -(self.mu**2) / (2.0 * self.sigma2)


@dataclass(frozen=True, eq=False)
class BernoulliSbmParams:
    pi: np.ndarray
    theta: np.ndarray
    loglik: float = float("nan")

    def __post_init__(self):
        if np.any(self.pi <= 0) or np.any(self.pi >= 1):
            raise ValueError("connection probabilities must lie strictly inside (0, 1)")
        if abs(np.sum(self.theta) - 1.0) > 1e-10:
            raise ValueError("theta must sum to one")

    @property
    def K(self) -> int:
        return self.pi.shape[0]

    def linear_form(self) -> tuple[np.ndarray, np.ndarray]:
        return np.log(self.pi) - np.log1p(-self.pi), np.log1p(-self.pi)


def _offdiag(u) -> np.ndarray:
    u = np.array(u, dtype=float)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError("data must be a square matrix")
    np.fill_diagonal(u, 0.0)
    if not np.all(np.isfinite(u)):
        raise ValueError("off-diagonal entries must be finite")
    return u


def _block_counts(u0: np.ndarray, W: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Weighted edge sums and weighted pair counts per block, excluding self pairs."""
    w = W.sum(axis=0)
    num = W.T @ u0 @ W
    den = np.outer(w, w) - W.T @ W
    return num, den


def gaussian_m_step(u, W) -> GaussianSbmParams:
    """Block means, pooled variance and proportions from (soft or hard) memberships ``W``."""
    u0 = _offdiag(u)
    W = np.asarray(W, dtype=float)
    n = u0.shape[0]
    num, den = _block_counts(u0, W)
    grand = u0.sum() / (n * (n - 1))
    with np.errstate(invalid="ignore", divide="ignore"):
        mu = np.where(den > 0, num / den, grand)
    sq = W.T @ (u0**2) @ W
    ss = sq - 2.0 * mu * num + mu**2 * den
    sigma2 = max(float(ss.sum() / den.sum()), SIGMA2_FLOOR)
    theta = W.sum(axis=0) / W.sum()
    return GaussianSbmParams(mu=mu, sigma2=sigma2, theta=theta)


def bernoulli_m_step(adj, W) -> BernoulliSbmParams:
    a0 = _offdiag(adj)
    W = np.asarray(W, dtype=float)
    num, den = _block_counts(a0, W)
    pi = (num + SMOOTH_SUCCESS) / (den + SMOOTH_SUCCESS + SMOOTH_FAILURE)
    theta = W.sum(axis=0) / W.sum()
    return BernoulliSbmParams(pi=pi, theta=theta)


def gaussian_complete_loglik(u, labels, params: GaussianSbmParams) -> float:
    u0 = _offdiag(u)
    Z = one_hot(labels, params.K)
    num, den = _block_counts(u0, Z)
    sq = Z.T @ (u0**2) @ Z
    ss = sq - 2.0 * params.mu * num + params.mu**2 * den
    with np.errstate(divide="ignore"):
        lt = np.log(params.theta)
    edge = -0.5 * den.sum() * np.log(2 * np.pi * params.sigma2) - ss.sum() / (2 * params.sigma2)
    return float(lt[labels].sum() + edge)


def bernoulli_complete_loglik(adj, labels, params: BernoulliSbmParams) -> float:
    a0 = _offdiag(adj)
    Z = one_hot(labels, params.K)
    num, den = _block_counts(a0, Z)
    with np.errstate(divide="ignore"):
        lt = np.log(params.theta)
    edge = np.sum(num * np.log(params.pi) + (den - num) * np.log1p(-params.pi))
    return float(lt[labels].sum() + edge)


def canonical_labels(labels) -> tuple[np.ndarray, np.ndarray]:
    """Relabel clusters in order of first appearance; returns (labels, perm) with new k = old perm[k]."""
    labels = np.asarray(labels)
    _, first = np.unique(labels, return_index=True)
    perm = labels[np.sort(first)]
    inverse = np.empty(perm.max() + 1, dtype=np.int64)
    inverse[perm] = np.arange(perm.size)
    return inverse[labels], perm


def _cem(u, K, labels, m_step, loglik, max_iters):
    for _ in range(max_iters):
        params = m_step(u, one_hot(labels, K))
        P, Q = params.linear_form()
        with np.errstate(divide="ignore"):
            lt = np.log(params.theta)
        new, changed = kernels.linear_icm_sweep(u, labels, P, Q, lt)
        if np.bincount(new, minlength=K).min() == 0:
            raise FitError("empty block")
        labels = new
        if changed == 0:
            break
    params = m_step(u, one_hot(labels, K))
    return labels, params, loglik(u, labels, params)


def _multi_start(u, K, seed, n_starts, m_step, loglik, init_labels, max_iters):
    n = u.shape[0]
    if not 1 <= K <= n:
        raise ValueError(f"K must lie in 1..{n}")
    best = None
    for s in range(n_starts):
        rng = np.random.default_rng([seed, s])
        for attempt in range(4):
            if s == 0 and attempt == 0 and init_labels is not None:
                start = np.asarray(init_labels, dtype=np.int64)
            else:
                start = random_partition(n, K, rng)
            try:
                labels, params, ll = _cem(u, K, start, m_step, loglik, max_iters)
            except FitError:
                log.debug("start %d attempt %d lost a block; redrawing", s, attempt)
                continue
            if best is None or ll > best[2]:
                best = (labels, params, ll)
            break
    if best is None:
        raise FitError("every start lost a block")
    labels, params, ll = best
    labels, perm = canonical_labels(labels)
    return labels, params, ll, perm


def fit_gaussian_sbm(
    data,
    K: int,
    seed: int = 0,
    n_starts: int = DEFAULT_STARTS,
    init_labels=None,
    max_iters: int = MAX_ITERS,
) -> tuple[np.ndarray, GaussianSbmParams]:
    """Directed Gaussian SBM with shared variance; the diagonal of ``data`` is ignored."""
    u = _offdiag(data)
    labels, p, ll, perm = _multi_start(
        u, K, seed, n_starts, gaussian_m_step, gaussian_complete_loglik, init_labels, max_iters
    )
    ix = np.ix_(perm, perm)
    return labels, GaussianSbmParams(mu=p.mu[ix], sigma2=p.sigma2, theta=p.theta[perm], loglik=ll)


def fit_bernoulli_sbm(
    adj,
    K: int,
    seed: int = 0,
    n_starts: int = DEFAULT_STARTS,
    init_labels=None,
    max_iters: int = MAX_ITERS,
) -> tuple[np.ndarray, BernoulliSbmParams]:
    """Directed Bernoulli SBM on a binary adjacency matrix (diagonal ignored)."""
    a = _offdiag(adj)
    off = ~np.eye(a.shape[0], dtype=bool)
    if not np.all(np.isin(a[off], (0.0, 1.0))):
        raise ValueError("adjacency entries must be 0 or 1")
    labels, p, ll, perm = _multi_start(
        a, K, seed, n_starts, bernoulli_m_step, bernoulli_complete_loglik, init_labels, max_iters
    )
    return labels, BernoulliSbmParams(pi=p.pi[np.ix_(perm, perm)], theta=p.theta[perm], loglik=ll)


def threshold_at_mean(comp: CompositionMatrix) -> np.ndarray:
    """Binary adjacency: 1 where an off-diagonal composition exceeds the mean off-diagonal value."""
    x = comp.comp
    off = ~np.eye(comp.n, dtype=bool)
    adj = (x > x[off].mean()).astype(float)
    np.fill_diagonal(adj, 0.0)
    return adj


def clr_gaussian_pipeline(comp: CompositionMatrix, K: int, seed: int = 0, n_starts: int = DEFAULT_STARTS) -> np.ndarray:
    """CLR-transform the rows, then fit the Gaussian SBM; returns labels."""
    labels, _ = fit_gaussian_sbm(clr_transform(comp).u, K, seed=seed, n_starts=n_starts)
    return labels

"""Starting partitions and the multi-start DirSBM driver."""

from __future__ import annotations

import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from sklearn.cluster import KMeans

from .baselines import fit_bernoulli_sbm, fit_gaussian_sbm, threshold_at_mean
from .inference import DEFAULT_MAX_ITERS, DEFAULT_TOL, FitError, FitResult, fit, random_partition
from .network import CompositionMatrix, clr_rows

log = logging.getLogger(__name__)

STRATEGIES = ("random", "kmeans", "clr_kmeans", "spectral", "bin_sbm", "gaus_sbm")
DEFAULT_KMEANS_RESTARTS = 50


class InitFallbackWarning(UserWarning):
    """An initializer could not run as requested and used random labels instead."""


@dataclass(frozen=True)
class InitConfig:
    strategy: str = "random"
    n_starts: int = 5
    kmeans_restarts: int = DEFAULT_KMEANS_RESTARTS
    seed: int = 0
    max_iters: int = DEFAULT_MAX_ITERS
    tol: float = DEFAULT_TOL
    threads: int = 1

    def __post_init__(self):
        strategy = self.strategy.replace("-", "_")
        if strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; choose from {STRATEGIES}")
        object.__setattr__(self, "strategy", strategy)
        if self.n_starts < 1:
            raise ValueError("n_starts must be at least 1")
        if self.kmeans_restarts < 1:
            raise ValueError("kmeans_restarts must be at least 1")
        if self.threads < 1:
            raise ValueError("threads must be at least 1")


def start_seed(seed: int, index: int) -> int:
    """Independent 32-bit seed for start ``index`` of a run seeded with ``seed``."""
    return int(np.random.SeedSequence([int(seed), int(index)]).generate_state(1)[0])


def _check_k(n: int, K: int) -> None:
    if not 1 <= K <= n:
        raise ValueError(f"K must lie in 1..{n}, got {K}")


def init_random(n: int, K: int, seed=0) -> np.ndarray:
    _check_k(n, K)
    return random_partition(n, K, np.random.default_rng(seed))


def kmeans_runs(data, K: int, restarts: int = DEFAULT_KMEANS_RESTARTS, seed=0) -> tuple[np.ndarray, np.ndarray]:
    """Best-of-``restarts`` k-means++ / Lloyd runs; returns (best labels, inertia of every run)."""
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or not np.all(np.isfinite(data)):
        raise ValueError("k-means data must be a finite 2-d array")
    _check_k(data.shape[0], K)
    if restarts < 1:
        raise ValueError("restarts must be at least 1")
    rng = np.random.default_rng(seed)
    best_labels, best_inertia = None, np.inf
    inertias = np.full(restarts, np.nan)
    for r in range(restarts):
        for _ in range(10):
            km = KMeans(n_clusters=K, init="k-means++", n_init=1, random_state=int(rng.integers(2**31)))
            with warnings.catch_warnings():
                # duplicate points can yield fewer distinct clusters; handled below
                warnings.simplefilter("ignore")
                labels = km.fit_predict(data)
            if np.unique(labels).size == K:
                break
        else:
            continue
        inertias[r] = km.inertia_
        if km.inertia_ < best_inertia:
            best_labels, best_inertia = labels.astype(np.int64), km.inertia_
    if best_labels is None:
        raise ValueError(f"k-means could not produce {K} nonempty clusters")
    return best_labels, inertias


def init_kmeans(data, K: int, restarts: int = DEFAULT_KMEANS_RESTARTS, seed=0) -> np.ndarray:
    return kmeans_runs(data, K, restarts, seed)[0]


def spectral_embedding(comp: CompositionMatrix, K: int) -> np.ndarray:
    """Rows of the top-K eigenvectors (by |eigenvalue|) of (X + X^T)/2, scaled to unit length."""
    x = comp.comp
    sym = 0.5 * (x + x.T)
    vals, vecs = np.linalg.eigh(sym)
    order = np.argsort(-np.abs(vals), kind="stable")[:K]
    emb = vecs[:, order]
    norms = np.linalg.norm(emb, axis=1, keepdims=True)
    return emb / np.where(norms > 0, norms, 1.0)


def init_spectral(comp: CompositionMatrix, K: int, seed=0, restarts: int = DEFAULT_KMEANS_RESTARTS) -> np.ndarray:
    _check_k(comp.n, K)
    try:
        emb = spectral_embedding(comp, K)
    except np.linalg.LinAlgError as exc:
        raise FitError(f"eigendecomposition failed: {exc}") from exc
    return init_kmeans(emb, K, restarts, seed)


def init_bin_sbm(comp: CompositionMatrix, K: int, seed=0) -> np.ndarray:
    _check_k(comp.n, K)
    adj = threshold_at_mean(comp)
    off = ~np.eye(comp.n, dtype=bool)
    density = adj[off].mean()
    if density in (0.0, 1.0):
        warnings.warn("thresholded network is empty or complete; using random labels", InitFallbackWarning)
        return init_random(comp.n, K, seed)
    return fit_bernoulli_sbm(adj, K, seed=seed)[0]


def init_gaus_sbm(comp: CompositionMatrix, K: int, seed=0) -> np.ndarray:
    _check_k(comp.n, K)
    return fit_gaussian_sbm(comp.comp, K, seed=seed)[0]


def initial_partition(
    comp: CompositionMatrix, K: int, strategy: str, seed=0, kmeans_restarts: int = DEFAULT_KMEANS_RESTARTS
) -> np.ndarray:
    strategy = strategy.replace("-", "_")
    if strategy == "random":
        return init_random(comp.n, K, seed)
    if strategy == "kmeans":
        return init_kmeans(comp.star_matrix(), K, kmeans_restarts, seed)
    if strategy == "clr_kmeans":
        return init_kmeans(clr_rows(comp.star_matrix()), K, kmeans_restarts, seed)
    if strategy == "spectral":
        return init_spectral(comp, K, seed, kmeans_restarts)
    if strategy == "bin_sbm":
        return init_bin_sbm(comp, K, seed)
    if strategy == "gaus_sbm":
        return init_gaus_sbm(comp, K, seed)
    raise ValueError(f"unknown strategy {strategy!r}")


def _one_start(comp, K, config: InitConfig, index: int):
    s = start_seed(config.seed, index)
    try:
        labels = initial_partition(comp, K, config.strategy, s, config.kmeans_restarts)
        return fit(comp, K, labels, max_iters=config.max_iters, tol=config.tol, seed=s)
    except FitError as exc:
        log.info("start %d failed: %s", index, exc)
        return exc


def multi_start_fit(comp: CompositionMatrix, K: int, config: InitConfig | None = None) -> FitResult:
    """Fit from ``config.n_starts`` starting partitions; keep the best observed hybrid log-likelihood.

    Start ``i`` draws its randomness from ``(config.seed, i)`` alone, so the
    result does not depend on ``config.threads``.
    """
    config = config or InitConfig()
    _check_k(comp.n, K)
    idx = range(config.n_starts)
    if config.threads > 1 and config.n_starts > 1:
        with ThreadPoolExecutor(max_workers=min(config.threads, config.n_starts)) as pool:
            outcomes = list(pool.map(lambda i: _one_start(comp, K, config, i), idx))
    else:
        outcomes = [_one_start(comp, K, config, i) for i in idx]

    logliks = [o.hybrid_loglik if isinstance(o, FitResult) else float("nan") for o in outcomes]
    good = [i for i, o in enumerate(outcomes) if isinstance(o, FitResult)]
    if not good:
        raise FitError(f"all {config.n_starts} starts failed; last error: {outcomes[-1]}")
    best_i = max(good, key=lambda i: (logliks[i], -i))
    best = outcomes[best_i]
    best.start_logliks = logliks
    return best

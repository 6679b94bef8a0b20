"""Choosing K by ICL and reading fitted concentrations as exchange proportions."""

from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .inference import FitError, FitResult
from .initialization import InitConfig, multi_start_fit
from .network import CompositionMatrix

log = logging.getLogger(__name__)


def icl_penalty(K: int, n: int) -> float:
    """``K^2/2 * log(n(n-1)) + (K-1)/2 * log(n)``."""
    return 0.5 * K * K * math.log(n * (n - 1)) + 0.5 * (K - 1) * math.log(n)


def icl(fit: FitResult, n: int | None = None) -> float:
    """Complete-data hybrid log-likelihood at the hard partition minus the ICL penalty."""
    n = fit.n if n is None else n
    return float(fit.complete_loglik - icl_penalty(fit.K, n))


@dataclass
class IclEntry:
    K: int
    icl: float
    fit: FitResult | None
    error: str | None = None


@dataclass
class IclTable:
    entries: list[IclEntry]
    best_K: int

    @property
    def best(self) -> IclEntry:
        return next(e for e in self.entries if e.K == self.best_K)

    def rows(self) -> list[dict]:
        return [
            {
                "K": e.K,
                "icl": e.icl,
                "complete_loglik": e.fit.complete_loglik if e.fit else float("nan"),
                "hybrid_loglik": e.fit.hybrid_loglik if e.fit else float("nan"),
                "error": e.error or "",
            }
            for e in self.entries
        ]


def select_k(comp: CompositionMatrix, k_range, config: InitConfig | None = None) -> IclTable:
    """Fit every K in ``k_range`` and pick the largest ICL (ties go to the smaller K)."""
    ks = sorted({int(k) for k in k_range})
    if not ks:
        raise ValueError("k_range is empty")
    config = config or InitConfig()

    def run(K, cfg):
        try:
            res = multi_start_fit(comp, K, cfg)
            return IclEntry(K, icl(res, comp.n), res)
        except (FitError, ValueError) as exc:
            log.warning("K=%d failed: %s", K, exc)
            return IclEntry(K, float("nan"), None, str(exc))

    if config.threads > 1 and len(ks) > 1:
        # parallelise across K; starts within each K run sequentially
        inner = replace(config, threads=1)
        with ThreadPoolExecutor(max_workers=min(config.threads, len(ks))) as pool:
            entries = list(pool.map(lambda K: run(K, inner), ks))
    else:
        entries = [run(K, config) for K in ks]

    ok = [e for e in entries if np.isfinite(e.icl)]
    if not ok:
        raise FitError("no K in the range could be fitted")
    best = ok[0]
    for e in ok[1:]:
        if e.icl > best.icl:
            best = e
    return IclTable(entries=entries, best_K=best.K)


@dataclass(frozen=True, eq=False)
class ExchangeMatrices:
    W: np.ndarray
    V: np.ndarray
    cluster_sizes: np.ndarray


def exchange_matrices(A, cluster_sizes) -> ExchangeMatrices:
    """Expected node-to-node (W) and cluster-to-cluster (V) exchange proportions.

    A sender in cluster ``k`` faces ``n_k - 1`` receivers of its own cluster
    and ``n_g`` of every other cluster, so
    ``w_kh = a_kh / ((n_k - 1) a_kk + sum_{g != k} n_g a_kg)`` and
    ``v_kh = n_h w_kh`` off the diagonal, ``v_kk = (n_k - 1) w_kk``.
    """
    A = np.asarray(A, dtype=float)
    sizes = np.asarray(cluster_sizes, dtype=float)
    K = A.shape[0]
    if A.shape != (K, K) or sizes.shape != (K,):
        raise ValueError("A must be K x K and cluster_sizes a K-vector")
    if not np.all(A > 0):
        raise ValueError("concentrations must be strictly positive")
    if np.any(sizes < 1) or np.any(sizes != np.round(sizes)):
        raise ValueError("cluster sizes must be positive integers")
    if sizes.sum() < 3:
        raise ValueError("need at least 3 nodes")
    receivers = np.tile(sizes, (K, 1)) - np.eye(K)
    den = (receivers * A).sum(axis=1)
    if np.any(den <= 0):
        raise ValueError("zero denominator in exchange proportions")
    singletons = np.flatnonzero(sizes == 1)
    if singletons.size:
        warnings.warn(
            f"singleton clusters {singletons.tolist()} have no within-cluster receivers; v_kk set to 0",
            RuntimeWarning,
        )
    W = A / den[:, None]
    V = receivers * W
    return ExchangeMatrices(W=W, V=V, cluster_sizes=sizes.astype(np.int64))

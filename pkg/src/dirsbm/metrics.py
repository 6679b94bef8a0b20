"""Partition agreement and parameter recovery metrics."""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.special import comb

MAX_PERMUTATION_K = 8


def adjusted_rand_index(labels_a, labels_b) -> float:
    """Hubert-Arabie adjusted Rand index from the contingency table.

    Returns 1.0 when both partitions are trivial in the same way (the
    expected and maximal indices coincide).
    """
    a = np.asarray(labels_a)
    b = np.asarray(labels_b)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("label vectors must be 1-d and of equal length")
    n = a.size
    if n < 2:
        raise ValueError("need at least two items")
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    table = np.zeros((ia.max() + 1, ib.max() + 1), dtype=np.int64)
    np.add.at(table, (ia, ib), 1)
    sum_cells = comb(table, 2).sum()
    sum_a = comb(table.sum(axis=1), 2).sum()
    sum_b = comb(table.sum(axis=0), 2).sum()
    expected = sum_a * sum_b / comb(n, 2)
    max_index = 0.5 * (sum_a + sum_b)
    denom = max_index - expected
    if denom == 0:
        return 1.0
    return float((sum_cells - expected) / denom)


def frobenius_distance(A_hat, A_true) -> float:
    """Frobenius norm of ``A_hat - A_true`` minimised over simultaneous row/column relabelings."""
    A_hat = np.asarray(A_hat, dtype=float)
    A_true = np.asarray(A_true, dtype=float)
    if A_hat.shape != A_true.shape or A_hat.ndim != 2 or A_hat.shape[0] != A_hat.shape[1]:
        raise ValueError("matrices must be square and of equal shape")
    K = A_hat.shape[0]
    if K > MAX_PERMUTATION_K:
        raise ValueError(f"exhaustive permutation search limited to K <= {MAX_PERMUTATION_K}")
    best = math.inf
    for perm in itertools.permutations(range(K)):
        p = list(perm)
        d = float(np.linalg.norm(A_hat[np.ix_(p, p)] - A_true))
        best = min(best, d)
    return best

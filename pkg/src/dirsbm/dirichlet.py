"""Dirichlet log-density, gamma/Dirichlet sampling and part aggregation."""

from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy.special import gammaln

SIMPLEX_TOL = 1e-8


def _check_alpha(alpha) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=float)
    if alpha.ndim != 1 or alpha.size < 2:
        raise ValueError("alpha must be a vector with at least 2 entries")
    if not np.all(np.isfinite(alpha)) or np.any(alpha <= 0):
        raise ValueError("alpha entries must be finite and strictly positive")
    return alpha


def log_density(x, alpha) -> float:
    """Log of the Dirichlet density at ``x``."""
    alpha = _check_alpha(alpha)
    x = np.asarray(x, dtype=float)
    if x.shape != alpha.shape:
        raise ValueError(f"dimension mismatch: x{x.shape} vs alpha{alpha.shape}")
    if np.any(x <= 0) or abs(x.sum() - 1.0) > SIMPLEX_TOL:
        raise ValueError("x must be strictly positive and sum to one")
    return float(gammaln(alpha.sum()) - gammaln(alpha).sum() + np.dot(alpha - 1.0, np.log(x)))


def log_standard_gamma(shape, rng: np.random.Generator, size=None) -> np.ndarray:
    """Logs of Gamma(shape, 1) draws.

    Shapes below one are boosted: draw at ``shape + 1`` and add
    ``log(U) / shape``. Working in log space keeps tiny draws from
    underflowing to zero.
    """
    shape = np.asarray(shape, dtype=float)
    if size is None:
        size = shape.shape
    small = np.broadcast_to(shape < 1.0, size)
    s = np.broadcast_to(shape, size)
    g = rng.standard_gamma(np.where(small, s + 1.0, s))
    out = np.log(g)
    if np.any(small):
        u = rng.random(size)
        out = np.where(small, out + np.log(u) / s, out)
    return out


def standard_gamma(shape, rng: np.random.Generator, size=None) -> np.ndarray:
    return np.exp(log_standard_gamma(shape, rng, size))


def sample(alpha, rng_seed=None, size: int | None = None) -> np.ndarray:
    """Dirichlet draws via normalised independent gamma variables.

    ``rng_seed`` may be an integer seed or a ``numpy.random.Generator``.
    Returns a ``d``-vector, or ``(size, d)`` array when ``size`` is given.
    """
    alpha = _check_alpha(alpha)
    rng = np.random.default_rng(rng_seed)
    shape = alpha.shape if size is None else (size, alpha.size)
    lg = log_standard_gamma(alpha, rng, shape)
    lg -= lg.max(axis=-1, keepdims=True)
    g = np.exp(lg)
    x = g / g.sum(axis=-1, keepdims=True)
    tiny = np.finfo(float).tiny
    if np.any(x < tiny):
        x = np.maximum(x, tiny)
        x /= x.sum(axis=-1, keepdims=True)
    return x


def aggregate_parts(x, groups: Sequence[Sequence[int]]) -> np.ndarray:
    """Sum the parts of ``x`` within each group; groups must partition the indices."""
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    flat = [int(j) for g in groups for j in g]
    if sorted(flat) != list(range(d)):
        raise ValueError("groups must partition the index set exactly once")
    return np.stack([x[..., list(g)].sum(axis=-1) for g in groups], axis=-1)


def aggregate_alpha(alpha, groups: Sequence[Sequence[int]]) -> np.ndarray:
    """Concentrations of the aggregated Dirichlet: per-group sums of ``alpha``."""
    return aggregate_parts(_check_alpha(alpha), groups)

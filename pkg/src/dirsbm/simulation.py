"""Synthetic composition-weighted networks.

Two generators:

* :func:`simulate_dirsbm` draws every row directly from the DirSBM
  (``x_i* ~ Dir(A[c_i, c_j], j != i)``);
* :func:`simulate_gamma_zeros` draws independent gamma weights
  ``y_ij ~ Gamma(A[c_i, c_j], 1)``, zeroes a fixed share of the
  off-diagonal cells, replaces the zeros by a small constant and
  normalises the rows.

With no zeros the two agree in distribution (a Dirichlet vector is a
vector of independent unit-scale gamma variables divided by its sum).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .dirichlet import log_standard_gamma
from .network import DEFAULT_EPSILON, CompositionMatrix, WeightedNetwork, replace_zeros, to_compositions

HOMOGENEITY_LEVELS = ("low", "medium", "high")

# Concentration matrices for three levels of parameter homogeneity.
PRESETS: dict[tuple[int, str], tuple[tuple[float, ...], ...]] = {
    (2, "low"): ((1.0, 0.6), (0.8, 1.5)),
    (2, "medium"): ((1.0, 0.6), (0.9, 1.4)),
    (2, "high"): ((1.0, 0.8), (0.9, 1.5)),
    (3, "low"): ((1.0, 0.6, 0.2), (0.6, 1.5, 0.5), (0.3, 0.4, 1.2)),
    (3, "medium"): ((1.0, 0.7, 0.5), (0.9, 1.5, 0.6), (0.4, 0.5, 1.2)),
    (3, "high"): ((1.0, 0.7, 0.5), (0.9, 1.3, 0.7), (0.6, 0.5, 1.2)),
    (5, "low"): (
        (1.0, 0.6, 0.2, 0.3, 0.5),
        (0.6, 1.5, 0.5, 0.4, 0.7),
        (0.3, 0.4, 1.2, 0.5, 0.2),
        (0.7, 0.5, 0.3, 1.4, 0.4),
        (0.5, 0.7, 0.8, 0.6, 1.7),
    ),
    (5, "medium"): (
        (1.0, 0.7, 0.5, 0.4, 0.6),
        (0.9, 1.5, 0.6, 0.5, 0.7),
        (0.4, 0.5, 1.2, 0.6, 0.3),
        (0.8, 0.6, 0.4, 1.4, 0.5),
        (0.5, 0.8, 0.9, 0.7, 1.7),
    ),
    (5, "high"): (
        (1.0, 0.7, 0.5, 0.4, 0.6),
        (0.9, 1.3, 0.7, 0.5, 0.8),
        (0.6, 0.7, 1.2, 0.8, 0.5),
        (0.8, 0.6, 0.4, 1.4, 0.7),
        (0.7, 0.8, 0.9, 0.6, 1.6),
    ),
}

_ALIASES = {"l": "low", "m": "medium", "med": "medium", "h": "high"}


def preset(K: int, homogeneity: str) -> np.ndarray:
    level = _ALIASES.get(homogeneity.lower(), homogeneity.lower())
    try:
        return np.array(PRESETS[(int(K), level)], dtype=float)
    except KeyError:
        raise ValueError(f"no preset for K={K}, homogeneity={homogeneity!r}") from None


def parse_preset_name(name: str) -> tuple[int, str]:
    """``"k3-low"`` -> ``(3, "low")``."""
    m = re.fullmatch(r"[kK](\d+)[-_](\w+)", name.strip())
    if not m:
        raise ValueError(f"preset names look like 'k3-low', got {name!r}")
    K, level = int(m.group(1)), _ALIASES.get(m.group(2).lower(), m.group(2).lower())
    preset(K, level)
    return K, level


@dataclass(frozen=True, eq=False)
class SimConfig:
    n: int
    A: np.ndarray
    theta: np.ndarray | None = None
    p0: float = 0.0
    epsilon: float = DEFAULT_EPSILON
    seed: int = 0
    K: int = field(init=False)

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or not np.all(A > 0):
            raise ValueError("A must be a square matrix with positive entries")
        K = A.shape[0]
        theta = np.full(K, 1.0 / K) if self.theta is None else np.array(self.theta, dtype=float)
        if theta.shape != (K,) or np.any(theta < 0) or abs(theta.sum() - 1) > 1e-10:
            raise ValueError("theta must be a K-vector on the simplex")
        if not 0.0 <= self.p0 < 1.0:
            raise ValueError("p0 must lie in [0, 1)")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.n < max(3, K):
            raise ValueError(f"n={self.n} too small for K={K}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "K", K)

    @classmethod
    def from_preset(cls, name: str, n: int, **kw) -> "SimConfig":
        K, level = parse_preset_name(name)
        return cls(n=n, A=preset(K, level), **kw)


def draw_labels(n: int, theta: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Multinomial(theta) labels, redrawn until every cluster with positive weight is used."""
    K = theta.size
    need = np.flatnonzero(theta > 0)
    while True:
        labels = rng.choice(K, size=n, p=theta)
        if np.all(np.isin(need, labels)):
            return labels


def simulate_dirsbm(config: SimConfig) -> tuple[CompositionMatrix, np.ndarray]:
    rng = np.random.default_rng(config.seed)
    n = config.n
    labels = draw_labels(n, config.theta, rng)
    shapes = config.A[np.ix_(labels, labels)]
    lg = log_standard_gamma(shapes, rng)
    np.fill_diagonal(lg, -np.inf)
    lg -= lg.max(axis=1, keepdims=True)
    x = np.exp(lg)
    x = np.maximum(x, np.finfo(float).tiny)
    np.fill_diagonal(x, 0.0)
    x /= x.sum(axis=1, keepdims=True)
    return CompositionMatrix(x), labels


def simulate_gamma_zeros(config: SimConfig) -> tuple[CompositionMatrix, np.ndarray, WeightedNetwork]:
    rng = np.random.default_rng(config.seed)
    n = config.n
    labels = draw_labels(n, config.theta, rng)
    shapes = config.A[np.ix_(labels, labels)]
    y = rng.standard_gamma(shapes)
    np.fill_diagonal(y, 0.0)
    off = np.flatnonzero(~np.eye(n, dtype=bool))
    n_zero = int(np.floor(config.p0 * n * (n - 1)))
    if n_zero:
        y.flat[rng.choice(off, size=n_zero, replace=False)] = 0.0
    raw = WeightedNetwork(y)
    comp = to_compositions(replace_zeros(raw, config.epsilon))
    return comp, labels, raw

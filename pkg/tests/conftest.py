from __future__ import annotations

import numpy as np
import pytest

from dirsbm.inference import DirichletBlockParams
from dirsbm.simulation import SimConfig, preset, simulate_dirsbm


def make_problem(n: int = 12, K: int = 3, seed: int = 0, homogeneity: str = "low"):
    """Small simulated DirSBM instance plus a random (not fitted) parameter set."""
    rng = np.random.default_rng(seed)
    A_true = preset(K, homogeneity) if K in (2, 3, 5) else rng.uniform(0.3, 2.0, (K, K))
    comp, labels = simulate_dirsbm(SimConfig(n=n, A=A_true, seed=seed))
    A = rng.uniform(0.3, 2.5, (K, K))
    theta = rng.dirichlet(np.ones(K))
    return comp, labels, DirichletBlockParams(A, theta)


@pytest.fixture
def problem():
    return make_problem()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

"""Replicated simulation studies over a grid of settings.

A grid is described by a mapping (usually read from TOML)::

    seed = 1
    replicates = 10
    n = [30, 100]
    K = [3]
    homogeneity = ["low", "medium"]
    p0 = [0.0, 0.05]
    models = ["dirsbm", "gaussbm", "binsbm", "clr-gaussbm"]
    starts = 5
    epsilon = 0.001
    generator = "auto"      # "dirichlet", "gamma", or "auto" (gamma iff p0 > 0)

Every (n, K, homogeneity, p0, replicate) cell gets a data seed derived from
the grid seed and the cell coordinates only, so all models see the same
networks and the thread count never changes a result.
"""

from __future__ import annotations

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np

from .baselines import clr_gaussian_pipeline, fit_bernoulli_sbm, fit_gaussian_sbm, threshold_at_mean
from .inference import FitError
from .initialization import InitConfig, multi_start_fit, start_seed
from .metrics import adjusted_rand_index, frobenius_distance
from .network import DEFAULT_EPSILON, CompositionMatrix
from .simulation import HOMOGENEITY_LEVELS, SimConfig, preset, simulate_dirsbm, simulate_gamma_zeros

log = logging.getLogger(__name__)

MODELS = ("dirsbm", "gaussbm", "binsbm", "clr-gaussbm")
RESULT_COLUMNS = ("n", "K", "homogeneity", "p0", "model", "replicate", "ari", "frob")


@dataclass(frozen=True)
class GridConfig:
    n: tuple[int, ...]
    K: tuple[int, ...]
    homogeneity: tuple[str, ...]
    p0: tuple[float, ...] = (0.0,)
    models: tuple[str, ...] = ("dirsbm",)
    replicates: int = 10
    seed: int = 0
    starts: int = 5
    epsilon: float = DEFAULT_EPSILON
    generator: str = "auto"
    init: str = "random"

    def __post_init__(self):
        for m in self.models:
            if m not in MODELS:
                raise ValueError(f"unknown model {m!r}; choose from {MODELS}")
        for h in self.homogeneity:
            if h not in HOMOGENEITY_LEVELS:
                raise ValueError(f"unknown homogeneity {h!r}")
        for K in self.K:
            for h in self.homogeneity:
                preset(K, h)
        if self.generator not in ("auto", "dirichlet", "gamma"):
            raise ValueError("generator must be 'auto', 'dirichlet' or 'gamma'")
        if self.replicates < 1 or self.starts < 1:
            raise ValueError("replicates and starts must be positive")

    @classmethod
    def from_mapping(cls, cfg: Mapping[str, Any]) -> "GridConfig":
        def tup(key, cast, default=None):
            v = cfg.get(key, default)
            if v is None:
                raise ValueError(f"grid config needs {key!r}")
            return tuple(cast(x) for x in (v if isinstance(v, (list, tuple)) else [v]))

        known = {"n", "K", "homogeneity", "p0", "models", "replicates", "seed", "starts", "epsilon", "generator", "init"}
        unknown = set(cfg) - known
        if unknown:
            raise ValueError(f"unknown grid keys: {sorted(unknown)}")
        return cls(
            n=tup("n", int),
            K=tup("K", int),
            homogeneity=tup("homogeneity", str),
            p0=tup("p0", float, [0.0]),
            models=tup("models", str, ["dirsbm"]),
            replicates=int(cfg.get("replicates", 10)),
            seed=int(cfg.get("seed", 0)),
            starts=int(cfg.get("starts", 5)),
            epsilon=float(cfg.get("epsilon", DEFAULT_EPSILON)),
            generator=str(cfg.get("generator", "auto")),
            init=str(cfg.get("init", "random")),
        )

    def cells(self):
        return itertools.product(self.n, self.K, self.homogeneity, self.p0, range(self.replicates))


def data_seed(seed: int, n: int, K: int, homogeneity: str, p0: float, replicate: int) -> int:
    h = HOMOGENEITY_LEVELS.index(homogeneity)
    key = [int(seed), int(n), int(K), h, int(round(p0 * 1_000_000)), int(replicate)]
    return int(np.random.SeedSequence(key).generate_state(1)[0])


def simulate_cell(grid: GridConfig, n, K, homogeneity, p0, replicate) -> tuple[CompositionMatrix, np.ndarray, SimConfig]:
    cfg = SimConfig(
        n=n,
        A=preset(K, homogeneity),
        p0=p0,
        epsilon=grid.epsilon,
        seed=data_seed(grid.seed, n, K, homogeneity, p0, replicate),
    )
    use_gamma = grid.generator == "gamma" or (grid.generator == "auto" and p0 > 0)
    if use_gamma:
        comp, labels, _ = simulate_gamma_zeros(cfg)
    else:
        comp, labels = simulate_dirsbm(cfg)
    return comp, labels, cfg


def fit_model(model: str, comp: CompositionMatrix, K: int, seed: int, starts: int = 5, init: str = "random"):
    """Labels and (for the DirSBM) the fitted concentration matrix."""
    if model == "dirsbm":
        res = multi_start_fit(comp, K, InitConfig(strategy=init, n_starts=starts, seed=seed))
        return res.labels, res.params.A
    if model == "gaussbm":
        return fit_gaussian_sbm(comp.comp, K, seed=seed, n_starts=starts)[0], None
    if model == "clr-gaussbm":
        return clr_gaussian_pipeline(comp, K, seed=seed, n_starts=starts), None
    if model == "binsbm":
        adj = threshold_at_mean(comp)
        return fit_bernoulli_sbm(adj, K, seed=seed, n_starts=starts)[0], None
    raise ValueError(f"unknown model {model!r}")


def _run_cell(grid: GridConfig, cell) -> list[dict]:
    n, K, homogeneity, p0, rep = cell
    comp, truth, cfg = simulate_cell(grid, n, K, homogeneity, p0, rep)
    out = []
    for j, model in enumerate(grid.models):
        seed = start_seed(cfg.seed, 1000 + j)
        try:
            labels, A = fit_model(model, comp, K, seed, grid.starts, grid.init)
            ari = adjusted_rand_index(labels, truth)
            frob = frobenius_distance(A, cfg.A) if A is not None else math.nan
        except (FitError, ValueError) as exc:
            log.warning("cell %s model %s failed: %s", cell, model, exc)
            ari = frob = math.nan
        out.append(dict(n=n, K=K, homogeneity=homogeneity, p0=p0, model=model, replicate=rep, ari=ari, frob=frob))
    return out


def run_grid(grid: GridConfig, threads: int = 1) -> list[dict]:
    """One record per (cell, model) with columns :data:`RESULT_COLUMNS`, in grid order."""
    cells = list(grid.cells())
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(lambda c: _run_cell(grid, c), cells))
    else:
        chunks = [_run_cell(grid, c) for c in cells]
    return [r for chunk in chunks for r in chunk]


def summarize(records: list[dict]) -> list[dict]:
    """Per (n, K, homogeneity, p0, model): replicate count and mean, median, SE of ARI and Frobenius distance."""
    groups: dict[tuple, list[dict]] = {}
    for r in records:
        groups.setdefault((r["n"], r["K"], r["homogeneity"], r["p0"], r["model"]), []).append(r)
    out = []
    for key, rows in groups.items():
        row = dict(zip(("n", "K", "homogeneity", "p0", "model"), key))
        row["replicates"] = len(rows)
        for metric in ("ari", "frob"):
            v = np.array([r[metric] for r in rows], dtype=float)
            v = v[np.isfinite(v)]
            row[f"{metric}_mean"] = float(v.mean()) if v.size else math.nan
            row[f"{metric}_median"] = float(np.median(v)) if v.size else math.nan
            row[f"{metric}_se"] = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else math.nan
        out.append(row)
    return out

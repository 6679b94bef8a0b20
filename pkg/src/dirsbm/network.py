"""Directed weighted networks and their compositional counterparts.

A network is stored densely as an ``n x n`` weight matrix with a literal
zero diagonal. Rows are turned into compositions (out-weights as shares of
a node's total out-weight); zero weights are first replaced by a small
constant, since compositional parts must be strictly positive.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

DEFAULT_EPSILON = 1e-3
ROW_SUM_TOL = 1e-10


class NetworkError(ValueError):
    """Raised for malformed network input or violated preconditions."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


def _default_ids(n: int) -> tuple[str, ...]:
    return tuple(str(i + 1) for i in range(n))


@dataclass(frozen=True, eq=False)
class WeightedNetwork:
    weights: np.ndarray
    node_ids: tuple[str, ...] = ()

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise NetworkError(f"weight matrix must be square, got shape {w.shape}")
        n = w.shape[0]
        if n < 3:
            raise NetworkError(f"need at least 3 nodes, got {n}")
        w = w.copy()
        np.fill_diagonal(w, 0.0)
        if not np.all(np.isfinite(w)):
            raise NetworkError("weights must be finite")
        if np.any(w < 0):
            raise NetworkError("weights must be nonnegative")
        ids = tuple(self.node_ids) if self.node_ids else _default_ids(n)
        if len(ids) != n:
            raise NetworkError(f"{len(ids)} node ids for {n} nodes")
        if len(set(ids)) != n:
            raise NetworkError("node ids must be unique")
        object.__setattr__(self, "weights", _frozen(w))
        object.__setattr__(self, "node_ids", ids)

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    def transpose(self) -> "WeightedNetwork":
        """Network with edge directions reversed (for receiving proportions)."""
        return WeightedNetwork(self.weights.T, self.node_ids)


@dataclass(frozen=True, eq=False)
class CompositionMatrix:
    """Row-compositional matrix with zero diagonal; each row sums to one."""

    comp: np.ndarray
    node_ids: tuple[str, ...] = ()

    def __post_init__(self):
        x = np.asarray(self.comp, dtype=float)
        if x.ndim != 2 or x.shape[0] != x.shape[1]:
            raise NetworkError(f"composition matrix must be square, got shape {x.shape}")
        n = x.shape[0]
        if n < 3:
            raise NetworkError(f"need at least 3 nodes, got {n}")
        if np.any(np.diag(x) != 0):
            raise NetworkError("composition diagonal must be exactly zero")
        off = ~np.eye(n, dtype=bool)
        if not np.all(np.isfinite(x)) or np.any(x[off] <= 0):
            raise NetworkError("off-diagonal compositions must be finite and strictly positive")
        if np.max(np.abs(x.sum(axis=1) - 1.0)) > ROW_SUM_TOL:
            raise NetworkError("composition rows must sum to one")
        ids = tuple(self.node_ids) if self.node_ids else _default_ids(n)
        if len(ids) != n:
            raise NetworkError(f"{len(ids)} node ids for {n} nodes")
        object.__setattr__(self, "comp", _frozen(x))
        object.__setattr__(self, "node_ids", ids)

    @property
    def n(self) -> int:
        return self.comp.shape[0]

    @cached_property
    def log_comp(self) -> np.ndarray:
        """Elementwise log of the compositions, with the diagonal set to 0."""
        with np.errstate(divide="ignore"):
            lx = np.log(self.comp)
        np.fill_diagonal(lx, 0.0)
        lx.setflags(write=False)
        return lx

    def star(self, i: int) -> np.ndarray:
        """Row ``i`` without its diagonal entry, an (n-1)-vector on the simplex."""
        row = self.comp[i]
        return np.concatenate([row[:i], row[i + 1 :]])

    def star_matrix(self) -> np.ndarray:
        """All rows without their diagonal entries, shape (n, n-1)."""
        n = self.n
        mask = ~np.eye(n, dtype=bool)
        return self.comp[mask].reshape(n, n - 1)


@dataclass(frozen=True, eq=False)
class ClrMatrix:
    u: np.ndarray
    node_ids: tuple[str, ...] = ()

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        n = u.shape[0]
        ids = tuple(self.node_ids) if self.node_ids else _default_ids(n)
        object.__setattr__(self, "u", _frozen(u))
        object.__setattr__(self, "node_ids", ids)

    @property
    def n(self) -> int:
        return self.u.shape[0]


def replace_zeros(net: WeightedNetwork, epsilon: float = DEFAULT_EPSILON) -> WeightedNetwork:
    """Set zero off-diagonal weights to ``epsilon``; positive weights are left alone."""
    if not epsilon > 0:
        raise NetworkError(f"epsilon must be positive, got {epsilon}")
    w = np.array(net.weights, copy=True)
    off = ~np.eye(net.n, dtype=bool)
    w[off & (w == 0)] = epsilon
    return WeightedNetwork(w, net.node_ids)


def to_compositions(net: WeightedNetwork) -> CompositionMatrix:
    w = net.weights
    off = ~np.eye(net.n, dtype=bool)
    totals = w.sum(axis=1)
    if np.any(totals == 0):
        bad = [net.node_ids[i] for i in np.flatnonzero(totals == 0)]
        raise NetworkError(f"nodes with all-zero out-weights: {bad}")
    if np.any(w[off] == 0):
        raise NetworkError("zero off-diagonal weight; call replace_zeros first")
    x = w / totals[:, None]
    # renormalise once more so rows sum to 1 to the last ulp
    x = x / x.sum(axis=1, keepdims=True)
    np.fill_diagonal(x, 0.0)
    return CompositionMatrix(x, net.node_ids)


def clr_rows(x: np.ndarray) -> np.ndarray:
    """Centered log-ratio of each row of a strictly positive (m, d) array."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise NetworkError("CLR requires strictly positive parts")
    lx = np.log(x)
    return lx - lx.mean(axis=-1, keepdims=True)


def clr_transform(comp: CompositionMatrix) -> ClrMatrix:
    """CLR coordinates of every row over its n-1 off-diagonal parts; the diagonal stays 0."""
    n = comp.n
    mask = ~np.eye(n, dtype=bool)
    u = np.zeros((n, n))
    u[mask] = clr_rows(comp.star_matrix()).ravel()
    return ClrMatrix(u, comp.node_ids)


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------


def _read_rows(path: Path) -> list[list[str]]:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    if not rows:
        raise NetworkError(f"{path}: empty file")
    return [[c.strip() for c in r] for r in rows]


def _parse_weight(s: str, where: str) -> float:
    try:
        v = float(s)
    except ValueError:
        raise NetworkError(f"{where}: cannot parse weight {s!r}") from None
    if not np.isfinite(v):
        raise NetworkError(f"{where}: non-finite weight {s!r}")
    if v < 0:
        raise NetworkError(f"{where}: negative weight {v}")
    return v


def _load_edge_list(path: Path, rows: list[list[str]]) -> WeightedNetwork:
    header = [h.lower() for h in rows[0]]
    if header[:3] != ["src", "dst", "weight"]:
        raise NetworkError(f"{path}: edge list header must be 'src,dst,weight', got {rows[0]}")
    index: dict[str, int] = {}
    edges: dict[tuple[int, int], float] = {}
    for lineno, r in enumerate(rows[1:], start=2):
        if len(r) < 3:
            raise NetworkError(f"{path}:{lineno}: expected 3 fields, got {len(r)}")
        src, dst, ws = r[0], r[1], r[2]
        w = _parse_weight(ws, f"{path}:{lineno}")
        i = index.setdefault(src, len(index))
        j = index.setdefault(dst, len(index))
        if (i, j) in edges and edges[(i, j)] != w:
            raise NetworkError(f"{path}:{lineno}: conflicting duplicate edge {src}->{dst}")
        edges[(i, j)] = w
    n = len(index)
    if n < 3:
        raise NetworkError(f"{path}: need at least 3 nodes, got {n}")
    y = np.zeros((n, n))
    for (i, j), w in edges.items():
        if i != j:
            y[i, j] = w
    return WeightedNetwork(y, tuple(index))


def _load_dense(path: Path, rows: list[list[str]]) -> WeightedNetwork:
    col_ids = rows[0][1:]
    body = rows[1:]
    row_ids = [r[0] for r in body]
    n = len(col_ids)
    if len(body) != n or any(len(r) != n + 1 for r in body):
        raise NetworkError(f"{path}: dense matrix must be square with id row and column")
    if row_ids != col_ids:
        raise NetworkError(f"{path}: row and column node ids differ")
    y = np.array(
        [[_parse_weight(v, f"{path}:{k + 2}") for v in r[1:]] for k, r in enumerate(body)],
        dtype=float,
    )
    return WeightedNetwork(y, tuple(col_ids))


def load_network(path: str | Path, format: str = "auto") -> WeightedNetwork:
    """Read a network from an edge-list CSV (``src,dst,weight``) or a dense matrix CSV.

    ``format`` is ``"edges"``, ``"dense"`` or ``"auto"`` (decided from the
    header). Absent pairs in an edge list get weight 0; self-loops are dropped.
    """
    path = Path(path)
    rows = _read_rows(path)
    if format == "auto":
        format = "edges" if [h.lower() for h in rows[0][:3]] == ["src", "dst", "weight"] else "dense"
    if format in ("edges", "edge-list"):
        return _load_edge_list(path, rows)
    if format in ("dense", "dense-matrix"):
        return _load_dense(path, rows)
    raise NetworkError(f"unknown network format {format!r}")


def write_dense_csv(path: str | Path, matrix: np.ndarray, node_ids: Sequence[str], digits: int = 12) -> None:
    fmt = f"{{:.{digits}g}}"
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["", *node_ids])
        for nid, row in zip(node_ids, np.asarray(matrix)):
            wr.writerow([nid, *(fmt.format(v) for v in row)])


def write_edge_list(path: str | Path, net: WeightedNetwork, digits: int = 12) -> None:
    fmt = f"{{:.{digits}g}}"
    ids = net.node_ids
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["src", "dst", "weight"])
        for i in range(net.n):
            for j in range(net.n):
                if i != j:
                    wr.writerow([ids[i], ids[j], fmt.format(net.weights[i, j])])


def load_compositions(path: str | Path) -> CompositionMatrix:
    """Read a dense composition CSV as written by :func:`write_dense_csv`."""
    net = _load_dense(Path(path), _read_rows(Path(path)))
    x = np.array(net.weights)
    x = x / x.sum(axis=1, keepdims=True)
    np.fill_diagonal(x, 0.0)
    return CompositionMatrix(x, net.node_ids)

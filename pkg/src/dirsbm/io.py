"""Serialisation of fits and run manifests.

CSV outputs start with a ``# manifest=... run=...`` comment line naming the
manifest that produced them. The run id is a digest of the command
configuration and input contents, so rerunning a command with the same
inputs and seed reproduces every output byte for byte; timings live only in
the manifest itself.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import platform
import sys
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from . import __version__
from ._backend import backend_name
from .inference import ClusterState, DirichletBlockParams, FitResult

SCHEMA_VERSION = 1
MANIFEST_NAME = "manifest.json"


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, Path):
        return str(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    return v


def run_id(config: dict, input_digests: dict) -> str:
    """Digest of configuration (minus output location and thread count), input contents and version."""
    cfg = {k: v for k, v in _jsonable(config).items() if k not in ("out", "threads")}
    blob = json.dumps({"config": cfg, "inputs": input_digests, "version": __version__}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


class OutputDir:
    """Collects the files written by one command and emits the manifest last."""

    def __init__(self, path: str | Path, command: list[str], config: dict, seed: int | None, inputs: dict | None = None):
        self.path = Path(path)
        self.path.mkdir(parents=True, exist_ok=True)
        self.command = list(command)
        self.config = _jsonable(config)
        self.seed = seed
        inputs = inputs or {}
        self.inputs = {role: {"path": str(p), "sha256": sha256_file(p)} for role, p in inputs.items()}
        self.run_id = run_id(self.config, {role: v["sha256"] for role, v in self.inputs.items()})
        self.outputs: list[Path] = []

    @property
    def header(self) -> str:
        return f"# manifest={MANIFEST_NAME} run={self.run_id}"

    def file(self, name: str) -> Path:
        p = self.path / name
        p.parent.mkdir(parents=True, exist_ok=True)
        self.outputs.append(p)
        return p

    def write_rows(self, name: str, columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
        p = self.file(name)
        with open(p, "w", newline="") as fh:
            fh.write(self.header + "\n")
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(columns)
            for r in rows:
                wr.writerow([_fmt(v) for v in r])
        return p

    def write_dicts(self, name: str, columns: Sequence[str], rows: Iterable[dict]) -> Path:
        return self.write_rows(name, columns, ([r.get(c, "") for c in columns] for r in rows))

    def write_matrix(self, name: str, M, row_names: Sequence[str], col_names: Sequence[str]) -> Path:
        M = np.asarray(M, dtype=float)
        return self.write_rows(name, ["", *col_names], ([rn, *row] for rn, row in zip(row_names, M)))

    def write_json(self, name: str, obj: dict) -> Path:
        p = self.file(name)
        body = dict(obj)
        body["manifest"] = MANIFEST_NAME
        body["run"] = self.run_id
        with open(p, "w") as fh:
            json.dump(_jsonable(body), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return p

    def finish(self, timing: dict[str, float]) -> Path:
        manifest = {
            "schema_version": SCHEMA_VERSION,
            "run": self.run_id,
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
            "version": __version__,
            "backend": backend_name(),
            "python": sys.version.split()[0],
            "platform": platform.platform(),
            "numpy": np.__version__,
            "inputs": self.inputs,
            "outputs": {p.relative_to(self.path).as_posix(): sha256_file(p) for p in self.outputs},
            "timing_seconds": timing,
        }
        p = self.path / MANIFEST_NAME
        with open(p, "w") as fh:
            json.dump(_jsonable(manifest), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return p


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        if math.isnan(v):
            return "nan"
        return f"{float(v):.12g}"
    return str(v)


def fit_to_dict(res: FitResult, node_ids: Sequence[str]) -> dict:
    """JSON-ready description of a DirSBM fit; labels are 1-based."""
    return {
        "schema_version": SCHEMA_VERSION,
        "model": "dirsbm",
        "K": res.K,
        "n": res.n,
        "node_ids": list(node_ids),
        "labels": (res.labels + 1).tolist(),
        "A": res.params.A.tolist(),
        "theta": res.params.theta.tolist(),
        "responsibilities": res.state.resp.tolist(),
        "hybrid_loglik": res.hybrid_loglik,
        "complete_loglik": res.complete_loglik,
        "loglik_trace": list(res.loglik_trace),
        "n_iters": res.n_iters,
        "converged": res.converged,
        "seed": res.seed,
        "n_rescues": res.n_rescues,
        "alignment_degenerate": res.alignment_degenerate,
        "start_logliks": list(res.start_logliks),
    }


def fit_from_dict(d: dict) -> tuple[FitResult, list[str]]:
    version = d.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ValueError(f"unsupported fit schema version {version!r}")
    if d.get("model", "dirsbm") != "dirsbm":
        raise ValueError(f"not a DirSBM fit (model={d.get('model')!r})")
    labels = np.asarray(d["labels"], dtype=np.int64) - 1
    res = FitResult(
        params=DirichletBlockParams(np.asarray(d["A"]), np.asarray(d["theta"])),
        state=ClusterState(labels=labels, resp=np.asarray(d["responsibilities"], dtype=float)),
        hybrid_loglik=float(d["hybrid_loglik"]),
        loglik_trace=[float(v) for v in d["loglik_trace"]],
        n_iters=int(d["n_iters"]),
        converged=bool(d["converged"]),
        seed=int(d["seed"]),
        complete_loglik=float(d["complete_loglik"]),
        n_rescues=int(d.get("n_rescues", 0)),
        alignment_degenerate=bool(d.get("alignment_degenerate", False)),
        start_logliks=[float(v) for v in d.get("start_logliks", [])],
    )
    return res, list(d["node_ids"])


def load_fit(path: str | Path) -> tuple[FitResult, list[str]]:
    with open(path) as fh:
        return fit_from_dict(json.load(fh))

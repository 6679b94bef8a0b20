"""``dirsbm`` command-line interface.

Subcommands: ``transform``, ``fit``, ``select-k``, ``interpret``, ``simulate``.
Every command writes into ``--out`` and finishes with ``manifest.json``.
Cluster labels in output files are 1-based.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from dataclasses import asdict

from . import __version__
from .baselines import fit_bernoulli_sbm, fit_gaussian_sbm, threshold_at_mean
from .experiments import MODELS, RESULT_COLUMNS, GridConfig, run_grid, summarize
from .inference import DEFAULT_MAX_ITERS, DEFAULT_TOL, FitError, FitResult
from .initialization import DEFAULT_KMEANS_RESTARTS, STRATEGIES, InitConfig, multi_start_fit
from .io import OutputDir, fit_to_dict, load_fit
from .network import (
    DEFAULT_EPSILON,
    NetworkError,
    clr_transform,
    load_network,
    replace_zeros,
    to_compositions,
)
from .selection import exchange_matrices, icl, select_k
from .simulation import SimConfig, simulate_dirsbm, simulate_gamma_zeros

log = logging.getLogger("dirsbm")

THREADS_ENV = "DIRSBM_THREADS"


def default_threads() -> int:
    raw = os.environ.get(THREADS_ENV, "").strip()
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise SystemExit(f"{THREADS_ENV} must be an integer, got {raw!r}")


def _positive_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s}")
    return v


def _positive_float(s: str) -> float:
    v = float(s)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {s}")
    return v


# ---------------------------------------------------------------------------
# shared pieces
# ---------------------------------------------------------------------------


def _load_comp(args):
    net = load_network(args.input, args.format)
    return to_compositions(replace_zeros(net, args.epsilon))


def _cluster_names(K: int) -> list[str]:
    return [str(k + 1) for k in range(K)]


def _write_dirsbm_fit(out: OutputDir, res: FitResult, node_ids, prefix: str = "") -> None:
    names = _cluster_names(res.K)
    out.write_rows(f"{prefix}labels.csv", ["node", "cluster"], zip(node_ids, res.labels + 1))
    out.write_matrix(f"{prefix}A.csv", res.params.A, names, names)
    out.write_rows(f"{prefix}theta.csv", ["cluster", "theta"], zip(names, res.params.theta))
    out.write_rows(f"{prefix}trace.csv", ["iteration", "hybrid_loglik"], enumerate(res.loglik_trace))
    out.write_json(f"{prefix}fit.json", fit_to_dict(res, node_ids))


def _write_exchange(out: OutputDir, A, sizes, prefix: str = "") -> None:
    ex = exchange_matrices(A, sizes)
    names = _cluster_names(len(sizes))
    out.write_matrix(f"{prefix}W.csv", 100 * ex.W, names, names)
    out.write_matrix(f"{prefix}V.csv", 100 * ex.V, names, names)


def _init_config(args) -> InitConfig:
    return InitConfig(
        strategy=args.init,
        n_starts=args.starts,
        kmeans_restarts=args.kmeans_restarts,
        seed=args.seed,
        max_iters=args.max_iter,
        tol=args.tol,
        threads=args.threads,
    )


def _config(args) -> dict:
    skip = {"func", "verbose", "argv"}
    return {k: v for k, v in vars(args).items() if k not in skip}


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_transform(args) -> OutputDir:
    comp = _load_comp(args)
    out = OutputDir(args.out, args.argv, _config(args), None, {"input": args.input})
    ids = comp.node_ids
    out.write_matrix("compositions.csv", comp.comp, ids, ids)
    out.write_matrix("clr.csv", clr_transform(comp).u, ids, ids)
    return out


def cmd_fit(args) -> OutputDir:
    comp = _load_comp(args)
    out = OutputDir(args.out, args.argv, _config(args), args.seed, {"input": args.input})
    ids = comp.node_ids
    if args.model == "dirsbm":
        res = multi_start_fit(comp, args.k, _init_config(args))
        _write_dirsbm_fit(out, res, ids)
        _write_exchange(out, res.params.A, res.cluster_sizes)
        return out

    names = _cluster_names(args.k)
    if args.model == "gaussbm":
        labels, p = fit_gaussian_sbm(comp.comp, args.k, seed=args.seed, n_starts=args.starts)
    elif args.model == "clr-gaussbm":
        labels, p = fit_gaussian_sbm(clr_transform(comp).u, args.k, seed=args.seed, n_starts=args.starts)
    else:
        labels, p = fit_bernoulli_sbm(threshold_at_mean(comp), args.k, seed=args.seed, n_starts=args.starts)
    block = p.mu if hasattr(p, "mu") else p.pi
    out.write_rows("labels.csv", ["node", "cluster"], zip(ids, labels + 1))
    out.write_matrix("mu.csv" if hasattr(p, "mu") else "pi.csv", block, names, names)
    out.write_rows("theta.csv", ["cluster", "theta"], zip(names, p.theta))
    summary = {"model": args.model, "K": args.k, "complete_loglik": p.loglik, "labels": (labels + 1).tolist()}
    if hasattr(p, "sigma2"):
        summary["sigma2"] = p.sigma2
    out.write_json("fit.json", summary)
    return out


def cmd_select_k(args) -> OutputDir:
    if args.kmin > args.kmax:
        raise ValueError("--kmin must not exceed --kmax")
    comp = _load_comp(args)
    out = OutputDir(args.out, args.argv, _config(args), args.seed, {"input": args.input})
    table = select_k(comp, range(args.kmin, args.kmax + 1), _init_config(args))
    out.write_dicts(
        "icl.csv", ["K", "icl", "complete_loglik", "hybrid_loglik", "error"], table.rows()
    )
    best = table.best.fit
    _write_dirsbm_fit(out, best, comp.node_ids)
    _write_exchange(out, best.params.A, best.cluster_sizes)
    log.info("best K = %d (ICL %.3f)", table.best_K, icl(best))
    return out


def cmd_interpret(args) -> OutputDir:
    res, _ = load_fit(args.fit)
    out = OutputDir(args.out, args.argv, _config(args), None, {"fit": args.fit})
    _write_exchange(out, res.params.A, res.cluster_sizes)
    return out


def _load_toml(path: str) -> dict:
    try:
        import tomllib
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def cmd_simulate(args) -> OutputDir:
    if args.grid:
        grid = GridConfig.from_mapping(_load_toml(args.grid))
        out = OutputDir(args.out, args.argv, {**_config(args), "grid_config": asdict(grid)}, grid.seed, {"grid": args.grid})
        records = run_grid(grid, threads=args.threads)
        out.write_dicts("results.csv", RESULT_COLUMNS, records)
        summary = summarize(records)
        cols = list(summary[0].keys()) if summary else []
        out.write_dicts("summary.csv", cols, summary)
        return out

    if not args.preset:
        raise ValueError("simulate needs --preset or --grid")
    cfg = SimConfig.from_preset(args.preset, args.n, p0=args.p0, epsilon=args.epsilon, seed=args.seed)
    out = OutputDir(args.out, args.argv, _config(args), args.seed)
    use_gamma = args.generator == "gamma" or (args.generator == "auto" and args.p0 > 0)
    ids = None
    if use_gamma:
        comp, labels, raw = simulate_gamma_zeros(cfg)
        ids = comp.node_ids
        out.write_matrix("weights.csv", raw.weights, ids, ids)
    else:
        comp, labels = simulate_dirsbm(cfg)
        ids = comp.node_ids
    out.write_matrix("compositions.csv", comp.comp, ids, ids)
    out.write_rows("labels.csv", ["node", "cluster"], zip(ids, labels + 1))
    out.write_json(
        "config.json",
        {"preset": args.preset, "n": cfg.n, "K": cfg.K, "A": cfg.A, "theta": cfg.theta, "p0": cfg.p0,
         "epsilon": cfg.epsilon, "seed": cfg.seed, "generator": "gamma" if use_gamma else "dirichlet"},
    )
    return out


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_input(p):
    p.add_argument("--input", required=True, help="network CSV (edge list 'src,dst,weight' or dense matrix)")
    p.add_argument("--format", default="auto", choices=["auto", "edges", "dense"], help="input layout (default: auto)")
    p.add_argument("--epsilon", type=_positive_float, default=DEFAULT_EPSILON,
                   help=f"replacement for zero weights (default {DEFAULT_EPSILON})")


def _add_fit_options(p, threads):
    p.add_argument("--starts", type=_positive_int, default=5,
                   help="number of starting partitions (default 5; 20 recommended for real data)")
    p.add_argument("--seed", type=int, default=0, help="master random seed (default 0)")
    p.add_argument("--init", default="random", choices=STRATEGIES, help="initialisation strategy (default random)")
    p.add_argument("--kmeans-restarts", type=_positive_int, default=DEFAULT_KMEANS_RESTARTS,
                   help=f"k-means restarts for k-means based initialisations (default {DEFAULT_KMEANS_RESTARTS})")
    p.add_argument("--tol", type=_positive_float, default=DEFAULT_TOL,
                   help=f"relative log-likelihood change for convergence (default {DEFAULT_TOL})")
    p.add_argument("--max-iter", type=_positive_int, default=DEFAULT_MAX_ITERS,
                   help=f"maximum CEM iterations per start (default {DEFAULT_MAX_ITERS})")
    p.add_argument("--threads", type=_positive_int, default=threads,
                   help=f"worker threads (default from ${THREADS_ENV}, else 1); results do not depend on it")
    p.add_argument("--out", required=True, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    threads = default_threads()
    parser = argparse.ArgumentParser(prog="dirsbm", description="Dirichlet stochastic block model for composition-weighted networks.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transform", help="export row compositions and their CLR coordinates")
    _add_input(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("fit", help="fit one model at a fixed number of clusters")
    _add_input(p)
    p.add_argument("--k", type=_positive_int, required=True, help="number of clusters")
    p.add_argument("--model", default="dirsbm", choices=MODELS, help="model to fit (default dirsbm)")
    _add_fit_options(p, threads)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("select-k", help="fit the DirSBM over a range of K and choose by ICL")
    _add_input(p)
    p.add_argument("--kmin", type=_positive_int, default=1, help="smallest K (default 1)")
    p.add_argument("--kmax", type=_positive_int, default=6, help="largest K (default 6)")
    _add_fit_options(p, threads)
    p.set_defaults(func=cmd_select_k)

    p = sub.add_parser("interpret", help="exchange proportion matrices W and V (x100) from a fit.json")
    p.add_argument("--fit", required=True, help="fit.json written by 'fit' or 'select-k'")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_interpret)

    p = sub.add_parser("simulate", help="simulate a network, or run a replicate grid from a TOML file")
    p.add_argument("--preset", help="parameter preset such as k3-low, k2-medium, k5-high")
    p.add_argument("--n", type=_positive_int, default=100, help="number of nodes (default 100)")
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("--p0", type=float, default=0.0, help="share of off-diagonal weights set to zero (default 0)")
    p.add_argument("--epsilon", type=_positive_float, default=DEFAULT_EPSILON,
                   help=f"replacement for zero weights (default {DEFAULT_EPSILON})")
    p.add_argument("--generator", default="auto", choices=["auto", "dirichlet", "gamma"],
                   help="row generator; auto uses gamma weights iff p0 > 0")
    p.add_argument("--grid", help="TOML grid description; writes results.csv and summary.csv")
    p.add_argument("--threads", type=_positive_int, default=threads, help="worker threads for grid cells")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(argv)
    args.argv = ["dirsbm", *argv]
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    t0 = time.perf_counter()
    try:
        out = args.func(args)
        out.finish({"total": time.perf_counter() - t0})
    except (NetworkError, FitError, ValueError, OSError) as exc:
        print(f"dirsbm {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

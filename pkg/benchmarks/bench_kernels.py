"""Time the numba and numpy label-sweep kernels on simulated networks.

    python3 benchmarks/bench_kernels.py [--sizes 50 100 200 400] [--K 3 5] [--repeats 5]

Prints one row per (kernel, n, K) with the best-of-``repeats`` wall time of
one full sweep under each backend, the speed-up, and whether both produced
the same labels. Compilation is excluded by a warm-up call.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from dirsbm import kernels
from dirsbm.simulation import SimConfig, preset, simulate_dirsbm


def _best_time(fn, repeats: int) -> tuple[float, tuple]:
    best, out = float("inf"), None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench(n: int, K: int, repeats: int, seed: int) -> list[dict]:
    A = preset(K, "low")
    comp, _ = simulate_dirsbm(SimConfig(n=n, A=A, seed=seed))
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, K, n)
    log_theta = np.full(K, -np.log(K))
    P = rng.normal(size=(K, K))
    Q = rng.normal(size=(K, K))
    u = comp.comp

    cases = {
        "dirsbm_sweep": (
            lambda: kernels.dirsbm_sweep_numba(comp.log_comp, labels, A, log_theta),
            lambda: kernels.dirsbm_sweep_numpy(comp.log_comp, labels, A, log_theta),
        ),
        "linear_icm_sweep": (
            lambda: kernels.linear_icm_sweep_numba(u, labels, P, Q, log_theta),
            lambda: kernels.linear_icm_sweep_numpy(u, labels, P, Q, log_theta),
        ),
    }
    rows = []
    for name, (jit_fn, np_fn) in cases.items():
        jit_fn()  # compile
        t_jit, out_jit = _best_time(jit_fn, repeats)
        t_np, out_np = _best_time(np_fn, repeats)
        rows.append(
            dict(
                kernel=name,
                n=n,
                K=K,
                numba_ms=1e3 * t_jit,
                numpy_ms=1e3 * t_np,
                speedup=t_np / t_jit,
                agree=bool(np.array_equal(out_jit[0], out_np[0])),
            )
        )
    return rows


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[50, 100, 200, 400])
    ap.add_argument("--K", type=int, nargs="+", default=[3, 5])
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    print(f"{'kernel':<18}{'n':>6}{'K':>4}{'numba ms':>12}{'numpy ms':>12}{'speedup':>10}  agree")
    for n in args.sizes:
        for K in args.K:
            for r in bench(n, K, args.repeats, args.seed):
                print(
                    f"{r['kernel']:<18}{r['n']:>6}{r['K']:>4}{r['numba_ms']:>12.3f}"
                    f"{r['numpy_ms']:>12.3f}{r['speedup']:>9.1f}x  {r['agree']}"
                )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

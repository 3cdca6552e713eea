"""Benchmark the compiled Newton kernel against the pure-numpy fallback.

Times the dominant workload — repeated weighted logistic refits during
bootstrap replication — at a few panel sizes, plus the end-to-end replicate
loop through the public API.

Usage: python benchmarks/benchmark_backends.py [--b 200] [--sizes 500,1117,4468]
"""

import argparse
import importlib
import time

import numpy as np

from paneldiag import _kernel_py
from paneldiag.bootstrap import BootstrapPlan, run_replicates
from paneldiag.logit import fit_weighted_logit
from paneldiag.sim import (DEFAULT_GAMMA_SYNTHETIC, SimConfig, design_matrix,
                           simulate_panel)


def _problem(n, seed=0):
    cfg = SimConfig(gamma_true=DEFAULT_GAMMA_SYNTHETIC, q=0.0, n_per_year=n,
                    B=2, R=1, seed=seed)
    x = design_matrix(cfg)
    rng = np.random.default_rng(seed)
    return simulate_panel(x, cfg.gamma_true, 0.0, rng)


def time_kernel(kernel, ds, reps):
    xbar = ds.design(1)
    z = ds.z[1]
    gamma0 = np.zeros(ds.P + 1)
    rng = np.random.default_rng(1)
    # warm-up + fixed weight draws so both kernels solve identical problems
    weights = [rng.standard_exponential(ds.n_t(1)) for _ in range(reps)]
    kernel.newton_logit(xbar, z, weights[0], gamma0)
    t0 = time.perf_counter()
    for w in weights:
        kernel.newton_logit(xbar, z, w, gamma0)
    return (time.perf_counter() - t0) / reps


def time_pipeline(ds, B):
    fits = {t: fit_weighted_logit(ds, t) for t in (1, 2)}
    plan = BootstrapPlan(B=B, seed=3)
    t0 = time.perf_counter()
    run_replicates(ds, fits, plan)
    return time.perf_counter() - t0


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--b", type=int, default=200,
                    help="bootstrap replicates for the pipeline timing")
    ap.add_argument("--reps", type=int, default=200,
                    help="kernel-level repetitions per size")
    ap.add_argument("--sizes", default="500,1117,4468")
    args = ap.parse_args()

    try:
        kernel_c = importlib.import_module("paneldiag._kernel")
    except ImportError:
        kernel_c = None
        print("compiled kernel unavailable; timing fallback only")

    sizes = [int(s) for s in args.sizes.split(",")]
    print(f"{'n':>6} {'python ms':>12} {'cython ms':>12} {'speedup':>8}")
    for n in sizes:
        ds = _problem(n)
        t_py = time_kernel(_kernel_py, ds, args.reps) * 1e3
        if kernel_c is not None:
            t_c = time_kernel(kernel_c, ds, args.reps) * 1e3
            print(f"{n:>6} {t_py:>12.3f} {t_c:>12.3f} {t_py / t_c:>8.1f}x")
        else:
            print(f"{n:>6} {t_py:>12.3f} {'-':>12} {'-':>8}")

    import os

    from paneldiag.backend import BACKEND

    ds = _problem(1117)
    print(f"\nend-to-end run_replicates, n=1117, B={args.b}:")
    t = time_pipeline(ds, args.b)
    print(f"  {BACKEND}: {t:.3f} s ({t / args.b * 1e3:.2f} ms per replicate)")
    if os.environ.get("PANELDIAG_BACKEND") != "python":
        print("  (rerun with PANELDIAG_BACKEND=python for the fallback "
              "pipeline timing)")


if __name__ == "__main__":
    main()

"""Command-line front end: fit, test, simulate.

All randomness flows from --seed; outputs are byte-identical for identical
(input, flags, seed) regardless of --workers.
"""

import argparse
import csv
import dataclasses
import io
import json
import os
import sys

import numpy as np

from . import __version__
from .bootstrap import BootstrapPlan, run_replicates, year_pairs
from .diagnostics import (all_residual_correlations, correlation_aggregate,
                          correlation_pairwise, serial_dynamic_aggregate,
                          serial_dynamic_pairwise)
from .errors import (DomainError, DuplicateCell, EmptyYear, FitError,
                     MalformedRow, NotPositiveDefinite, PanelDiagError,
                     SingularCovariance, TooManyFailures, ZeroVariance)
from .logit import fit_weighted_logit
from .panel import CovariateSchema, load_panel, summarize
from .sim import parse_sim_config, run_simulation

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3
EXIT_CONFIG = 4

# two-sided 5% normal quantile; flagging uses strict inequality
Z_CRITICAL = 1.959964

_NUMERICAL_ERRORS = (FitError, SingularCovariance, ZeroVariance,
                     TooManyFailures, NotPositiveDefinite)
_INPUT_ERRORS = (MalformedRow, DuplicateCell, EmptyYear, OSError)


def _load_inputs(args):
    with open(args.schema, "r", encoding="utf-8") as fh:
        schema = CovariateSchema.from_json(fh.read())
    with open(args.input, "r", encoding="utf-8") as fh:
        ds = load_panel(fh, schema)
    return ds


def _write(out_dir, name, text):
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def _fit_all_years(ds):
    return {t: fit_weighted_logit(ds, t) for t in range(1, ds.T + 1)}


def _fits_csv(ds, fits):
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["year", "variable", "estimate", "se", "significant_5pct"])
    labels = ["Intercept"] + list(ds.schema.names)
    for t in range(1, ds.T + 1):
        fit = fits[t]
        for j, name in enumerate(labels):
            flag = int(abs(fit.gamma[j] / fit.se[j]) > Z_CRITICAL)
            w.writerow([ds.year_labels[t - 1], name,
                        repr(float(fit.gamma[j])), repr(float(fit.se[j])),
                        flag])
    return out.getvalue()


def _triangle_csv(ds, upper, lower):
    """T x T matrix CSV: ``upper`` values above the diagonal, ``lower``
    below, with an empty diagonal."""
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    labels = list(ds.year_labels)
    w.writerow(["year"] + [str(v) for v in labels])
    for i in range(ds.T):
        row = [str(labels[i])]
        for j in range(ds.T):
            if i == j:
                row.append("")
            elif j > i:
                row.append(repr(float(upper[(i + 1, j + 1)])))
            else:
                row.append(repr(float(lower[(j + 1, i + 1)])))
        w.writerow(row)
    return out.getvalue()


def cmd_fit(args):
    ds = _load_inputs(args)
    fits = _fit_all_years(ds)
    formats = args.format.split(",")
    if "csv" in formats:
        _write(args.out, "fits.csv", _fits_csv(ds, fits))
        _write(args.out, "summary.csv", summarize(ds).to_csv())
    if "json" in formats:
        payload = "[\n" + ",\n".join(
            fits[t].to_json(names=ds.schema.names,
                            year_label=ds.year_labels[t - 1])
            for t in range(1, ds.T + 1)) + "\n]\n"
        _write(args.out, "fits.json", payload)
        _write(args.out, "summary.json", summarize(ds).to_json())
    print(f"fitted {ds.T} years; outputs in {args.out}")
    return EXIT_OK


def cmd_test(args):
    ds = _load_inputs(args)
    fits = _fit_all_years(ds)
    plan = BootstrapPlan(B=args.b, seed=args.seed)
    draws = run_replicates(ds, fits, plan, workers=args.workers)
    corrs = all_residual_correlations(ds, fits)

    serial_agg = serial_dynamic_aggregate(fits, draws)
    corr_agg = correlation_aggregate(corrs, draws)
    serial_pairs = {}
    corr_pairs = {}
    for s, t in year_pairs(ds.T):
        serial_pairs[(s, t)] = serial_dynamic_pairwise(fits, draws, s, t)
        j = corrs.pair_order.index((s, t))
        corr_pairs[(s, t)] = correlation_pairwise(
            float(corrs.rho[j]), draws, s, t)

    report = {
        "serial_aggregate": serial_agg.to_dict(),
        "corr_aggregate": corr_agg.to_dict(),
        "serial_pairwise": [r.to_dict() for r in serial_pairs.values()],
        "corr_pairwise": [r.to_dict() for r in corr_pairs.values()],
        "residual_correlations": {
            f"{s},{t}": float(corrs.rho[j])
            for j, (s, t) in enumerate(corrs.pair_order)},
        "raw_correlations": {
            f"{s},{t}": float(corrs.raw[j])
            for j, (s, t) in enumerate(corrs.pair_order)},
        "B": plan.B,
        "B_used": draws.B_used,
        "seed": args.seed,
    }
    formats = args.format.split(",")
    if "json" in formats:
        _write(args.out, "report.json",
               json.dumps(report, indent=2, sort_keys=True) + "\n")
    if "csv" in formats:
        _write(args.out, "serial_pairwise.csv", _triangle_csv(
            ds, {k: v.statistic for k, v in serial_pairs.items()},
            {k: v.p_value for k, v in serial_pairs.items()}))
        _write(args.out, "corr_pairwise.csv", _triangle_csv(
            ds, {k: v.statistic for k, v in corr_pairs.items()},
            {k: v.p_value for k, v in corr_pairs.items()}))
        _write(args.out, "corr_values.csv", _triangle_csv(
            ds, {pair: corrs.raw[j] for j, pair in enumerate(corrs.pair_order)},
            {pair: corrs.rho[j] for j, pair in enumerate(corrs.pair_order)}))
    print(f"serial aggregate: stat={serial_agg.statistic:.4f} "
          f"df={serial_agg.df} p={serial_agg.p_value:.4g}")
    print(f"correlation aggregate: stat={corr_agg.statistic:.4f} "
          f"df={corr_agg.df} p={corr_agg.p_value:.4g}")
    return EXIT_OK


def cmd_simulate(args):
    with open(args.sim_config, "r", encoding="utf-8") as fh:
        cfg = parse_sim_config(fh.read())
    if args.b is not None:
        cfg = dataclasses.replace(cfg, B=args.b)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    result = run_simulation(cfg, workers=args.workers)
    levels = tuple(float(v) for v in args.levels.split(","))
    formats = args.format.split(",")
    if "csv" in formats:
        _write(args.out, "runs.csv", result.to_runs_csv())
        _write(args.out, "hist.csv", result.hist_csv())
    if "json" in formats:
        _write(args.out, "summary.json", result.summary_json(levels) + "\n")
    summary = json.loads(result.summary_json(levels))
    print("rejection rates (levels " + args.levels + "):")
    for test, rates in sorted(summary["rejection_rates"].items()):
        print(f"  {test}: " + ", ".join(f"{r:.3f}" for r in rates))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="paneldiag",
        description="Pre-modeling diagnostic tests for longitudinal "
                    "binary-claim panels")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_data=True):
        if needs_data:
            p.add_argument("--input", required=True, help="panel CSV path")
            p.add_argument("--schema", required=True,
                           help="covariate schema JSON path")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--format", default="json,csv",
                       help="comma subset of {json,csv}")
        p.add_argument("--workers", type=int, default=os.cpu_count() or 1)

    p_fit = sub.add_parser("fit", help="per-year logistic regression tables")
    common(p_fit)
    p_fit.set_defaults(func=cmd_fit)

    p_test = sub.add_parser("test", help="run both diagnostic test families")
    common(p_test)
    p_test.add_argument("--b", type=int, default=1000,
                        help="bootstrap replicates")
    p_test.add_argument("--seed", type=int, default=0)
    p_test.set_defaults(func=cmd_test)

    p_sim = sub.add_parser("simulate", help="run a simulation scenario")
    common(p_sim, needs_data=False)
    p_sim.add_argument("--sim-config", required=True,
                       help="scenario key = value file")
    p_sim.add_argument("--b", type=int, default=None,
                       help="override scenario B")
    p_sim.add_argument("--seed", type=int, default=None,
                       help="override scenario seed")
    p_sim.add_argument("--levels", default="0.01,0.05,0.10")
    p_sim.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _INPUT_ERRORS as exc:
        print(json.dumps({"error": type(exc).__name__, "detail": str(exc)}),
              file=sys.stderr)
        return EXIT_INPUT
    except _NUMERICAL_ERRORS as exc:
        print(json.dumps({"error": type(exc).__name__, "detail": str(exc)}),
              file=sys.stderr)
        return EXIT_NUMERICAL
    except (DomainError, PanelDiagError) as exc:
        print(json.dumps({"error": type(exc).__name__, "detail": str(exc)}),
              file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

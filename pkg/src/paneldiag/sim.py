"""Monte Carlo study: coupled two-year data generation, repeated testing,
rejection rates, and the two comparator baselines (naive likelihood ratio
test; plain residual-correlation t-test standard error).

Per-run randomness is keyed by (seed, r) with separate sub-streams for the
simulated data and the bootstrap, so every comparator inside a run sees the
identical dataset and results are independent of worker count.
"""

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import panel
from .backend import (STATUS_CONVERGED, newton_logit)
from .bootstrap import BootstrapPlan, run_replicates
from .diagnostics import (TestReport, correlation_aggregate,
                          all_residual_correlations, residual_correlation)
from .errors import DegenerateResiduals, DomainError, FitError, PanelDiagError
from .logit import (GAMMA_CAP, MAX_ITER, TOL_GRAD, TOL_STEP,
                    fit_weighted_logit, clip_probs)
from .numkit import chisq_sf
from .diagnostics import serial_dynamic_aggregate

KIND_NAIVE_LR = "naive_lr"

# six-category entity mix for the synthetic surrogate design; chosen to give
# a claim mix comparable to a mid-size property portfolio, not fitted to any
# particular dataset
_CATEGORY_PROBS = (0.16, 0.07, 0.28, 0.17, 0.23, 0.09)

SYNTHETIC_NAMES = ("cat1", "cat2", "cat3", "cat4", "cat5",
                   "flag", "cont1", "cont2")

DEFAULT_GAMMA_SYNTHETIC = (-1.466, 0.86, 1.53, -0.47, -0.20,
                           0.55, 0.21, 0.94, -0.517)


@dataclass(frozen=True)
class SimConfig:
    """Specification of one simulation scenario."""

    gamma_true: tuple
    q: float
    n_per_year: int
    B: int
    R: int
    seed: int
    duplicate_factor: int = 1
    covariate_file: Optional[str] = None

    def __post_init__(self):
        if not 0.0 <= self.q <= 1.0:
            raise DomainError(f"q must lie in [0,1], got {self.q}")
        if self.R < 1:
            raise DomainError(f"R must be >= 1, got {self.R}")
        if self.B < 2:
            raise DomainError(f"B must be >= 2, got {self.B}")
        if self.duplicate_factor < 1:
            raise DomainError("duplicate_factor must be >= 1")


def synthetic_covariates(n, rng):
    """Surrogate covariate matrix: 5 exclusive category dummies, one binary
    flag, two continuous columns. Shape (n, 8)."""
    cats = rng.choice(6, size=n, p=_CATEGORY_PROBS)
    x = np.zeros((n, 8))
    for j in range(5):
        x[:, j] = (cats == j)
    x[:, 5] = rng.integers(0, 2, size=n)
    x[:, 6] = rng.normal(0.0, 1.0, size=n)
    x[:, 7] = rng.normal(0.0, 1.0, size=n)
    return x


def design_matrix(cfg):
    """The fixed covariate block for a scenario (identical across runs and
    across the two years, replicated duplicate_factor times)."""
    base_n = cfg.n_per_year // cfg.duplicate_factor
    if base_n * cfg.duplicate_factor != cfg.n_per_year:
        raise DomainError("n_per_year must be divisible by duplicate_factor")
    if cfg.covariate_file is not None:
        x = np.loadtxt(cfg.covariate_file, delimiter=",", ndmin=2)
        if x.shape[0] < base_n:
            raise DomainError(
                f"covariate file has {x.shape[0]} rows, need {base_n}")
        x = x[:base_n]
    else:
        rng = np.random.Generator(np.random.Philox(
            np.random.SeedSequence([int(cfg.seed), 0xC0DE])))
        x = synthetic_covariates(base_n, rng)
    return np.tile(x, (cfg.duplicate_factor, 1))


def simulate_panel(x, gamma_true, q, rng, schema=None):
    """Balanced two-year panel with year-2 indicators coupled to year 1.

    Z_1 ~ Bernoulli(p(x)); with probability q the year-2 indicator is copied,
    otherwise redrawn from the same conditional law. X is shared by both
    years, so marginals match and Corr(Z_1, Z_2) -> q when p is constant.
    """
    x = np.asarray(x, dtype=float)
    n, p_cov = x.shape
    gamma_true = np.asarray(gamma_true, dtype=float)
    if len(gamma_true) != p_cov + 1:
        raise DomainError("gamma_true must have one entry per covariate "
                          "plus the intercept")
    eta = gamma_true[0] + x @ gamma_true[1:]
    prob = 1.0 / (1.0 + np.exp(-eta))
    z1 = (rng.random(n) < prob).astype(float)
    copy = rng.random(n) < q
    z2_fresh = (rng.random(n) < prob).astype(float)
    z2 = np.where(copy, z1, z2_fresh)
    if schema is None:
        names = SYNTHETIC_NAMES if p_cov == len(SYNTHETIC_NAMES) else \
            tuple(f"x{j}" for j in range(1, p_cov + 1))
        schema = panel.CovariateSchema.all_continuous(names)
    subjects = [f"s{i}" for i in range(n)]
    rows = np.arange(n)
    return panel.PanelDataset(
        schema=schema, year_labels=(1, 2), subjects=subjects,
        z_by_year={1: z1, 2: z2}, x_by_year={1: x, 2: x},
        rows_by_year={1: rows, 2: rows})


def naive_lr_test(ds):
    """Pooled-vs-free two-year likelihood ratio test; df = P+1.

    Assumes conditional independence across years, which is exactly the
    assumption the comparison is meant to stress.
    """
    if ds.T != 2:
        raise DomainError("naive LR test is defined for T = 2")
    m = ds.P + 1
    lls = []
    for t in (1, 2):
        gamma, _, ll, _, _, status = newton_logit(
            ds.design(t), ds.z[t], np.ones(ds.n_t(t)), np.zeros(m),
            TOL_GRAD, TOL_STEP, MAX_ITER, GAMMA_CAP)
        if status != STATUS_CONVERGED:
            raise FitError(f"free fit for year {t} failed (status {status})")
        lls.append(ll)
    x_pooled = np.ascontiguousarray(np.vstack([ds.design(1), ds.design(2)]))
    z_pooled = np.ascontiguousarray(np.concatenate([ds.z[1], ds.z[2]]))
    _, _, ll_pooled, _, _, status = newton_logit(
        x_pooled, z_pooled, np.ones(len(z_pooled)), np.zeros(m),
        TOL_GRAD, TOL_STEP, MAX_ITER, GAMMA_CAP)
    if status != STATUS_CONVERGED:
        raise FitError(f"pooled fit failed (status {status})")
    stat = max(0.0, -2.0 * (ll_pooled - (lls[0] + lls[1])))
    return TestReport(kind=KIND_NAIVE_LR, statistic=float(stat), df=m,
                      p_value=chisq_sf(float(stat), m), B_used=0)


def ttest_se_residual_corr(ds, fits):
    """Pearson correlation of the two residual series and its textbook
    standard error sqrt((1 - r^2) / (n - 2)) — what an off-the-shelf
    correlation test reports."""
    if ds.T != 2:
        raise DomainError("residual t-test SE is defined for T = 2")
    idx, pos_1, pos_2 = ds.pair_cohort(1, 2)
    if len(idx) < 3:
        raise DomainError("need at least 3 shared subjects")
    r = {}
    for t in (1, 2):
        eta = ds.design(t) @ fits[t].gamma
        p = clip_probs(1.0 / (1.0 + np.exp(-eta)))
        r[t] = (ds.z[t] - p) / np.sqrt(p * (1.0 - p))
    a = r[1][pos_1]
    b = r[2][pos_2]
    a_c = a - a.mean()
    b_c = b - b.mean()
    denom = math.sqrt(float((a_c @ a_c) * (b_c @ b_c)))
    if denom == 0.0:
        raise DegenerateResiduals("a residual series is constant")
    rho_tilde = float(a_c @ b_c) / denom
    se = math.sqrt((1.0 - rho_tilde ** 2) / (len(idx) - 2))
    return rho_tilde, se


def bootstrap_se_rho(rho, draws, s=1, t=2):
    """Bootstrap standard error of the residual correlation, cancelled form:
    sqrt(sum_b (rho_b - rho)^2 / B_used)."""
    j = draws.pair_index(s, t)
    reps = draws.rhos[draws.usable, j]
    return math.sqrt(float(np.sum((reps - rho) ** 2)) / draws.B_used)


@dataclass
class SimResult:
    """Per-run p-values, SE estimates and failure flags for one scenario."""

    p_serial: np.ndarray
    p_corr: np.ndarray
    p_naive: np.ndarray
    se_boot: np.ndarray
    se_ttest: np.ndarray
    rho: np.ndarray
    failed: np.ndarray
    config: Optional[SimConfig] = None

    @property
    def R_used(self):
        return int(np.sum(~self.failed))

    @property
    def mc_sd_rho(self):
        r = self.rho[~self.failed]
        return float(np.std(r, ddof=1)) if len(r) > 1 else float("nan")

    def to_runs_csv(self):
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["r", "p_serial", "p_corr", "p_naive",
                    "se_boot", "se_ttest"])
        for r in range(len(self.p_serial)):
            w.writerow([r + 1] + [repr(float(v)) for v in (
                self.p_serial[r], self.p_corr[r], self.p_naive[r],
                self.se_boot[r], self.se_ttest[r])])
        return out.getvalue()

    def summary_json(self, levels=(0.01, 0.05, 0.10)):
        ok = ~self.failed
        summary = {
            "R": len(self.p_serial),
            "R_used": self.R_used,
            "levels": list(levels),
            "rejection_rates": {
                "serial": rejection_rates(self.p_serial[ok], levels),
                "correlation": rejection_rates(self.p_corr[ok], levels),
                "naive_lr": rejection_rates(self.p_naive[ok], levels),
            },
            "ks_uniform": {
                "serial": ks_distance_uniform(self.p_serial[ok]),
                "correlation": ks_distance_uniform(self.p_corr[ok]),
            },
            "mc_sd_rho": self.mc_sd_rho,
            "mean_se_boot": float(np.mean(self.se_boot[ok])),
            "mean_se_ttest": float(np.mean(self.se_ttest[ok])),
        }
        return json.dumps(summary, indent=2, sort_keys=True)

    def hist_csv(self, bins=20):
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["bin_lo", "bin_hi", "count_serial", "count_corr",
                    "count_naive", "count_se_boot", "count_se_ttest"])
        ok = ~self.failed
        edges = np.linspace(0.0, 1.0, bins + 1)
        h_serial = np.histogram(self.p_serial[ok], bins=edges)[0]
        h_corr = np.histogram(self.p_corr[ok], bins=edges)[0]
        h_naive = np.histogram(self.p_naive[ok], bins=edges)[0]
        se_all = np.concatenate([self.se_boot[ok], self.se_ttest[ok]])
        se_edges = np.linspace(0.0, max(float(np.max(se_all)), 1e-12),
                               bins + 1) if len(se_all) else edges
        h_se_b = np.histogram(self.se_boot[ok], bins=se_edges)[0]
        h_se_t = np.histogram(self.se_ttest[ok], bins=se_edges)[0]
        for i in range(bins):
            w.writerow([repr(float(edges[i])), repr(float(edges[i + 1])),
                        int(h_serial[i]), int(h_corr[i]), int(h_naive[i]),
                        int(h_se_b[i]), int(h_se_t[i])])
        return out.getvalue()


def rejection_rates(pvalues, levels):
    """Fraction of p-values strictly below each level."""
    p = np.asarray(pvalues, dtype=float)
    if len(p) == 0:
        raise DomainError("rejection_rates needs at least one p-value")
    return [float(np.mean(p < lv)) for lv in levels]


def ks_distance_uniform(pvalues):
    """Kolmogorov-Smirnov distance of a sample to Uniform[0,1]."""
    p = np.sort(np.asarray(pvalues, dtype=float))
    n = len(p)
    if n == 0:
        return float("nan")
    grid = np.arange(1, n + 1) / n
    return float(max(np.max(grid - p), np.max(p - (grid - 1.0 / n))))


def _run_block(cfg, x, r_lo, r_hi):
    """Execute runs r_lo..r_hi-1 (1-based, half-open)."""
    nr = r_hi - r_lo
    cols = {k: np.full(nr, np.nan) for k in
            ("p_serial", "p_corr", "p_naive", "se_boot", "se_ttest", "rho")}
    failed = np.zeros(nr, dtype=bool)
    for k, r in enumerate(range(r_lo, r_hi)):
        data_rng = np.random.Generator(np.random.Philox(
            np.random.SeedSequence([int(cfg.seed), int(r), 1])))
        boot_seed = int(np.random.SeedSequence(
            [int(cfg.seed), int(r), 2]).generate_state(1, np.uint64)[0])
        try:
            ds = simulate_panel(x, cfg.gamma_true, cfg.q, data_rng)
            fits = {t: fit_weighted_logit(ds, t) for t in (1, 2)}
            plan = BootstrapPlan(B=cfg.B, seed=boot_seed)
            draws = run_replicates(ds, fits, plan)
            serial = serial_dynamic_aggregate(fits, draws)
            rho = residual_correlation(ds, fits, 1, 2)
            corr = correlation_aggregate(np.array([rho]), draws)
            naive = naive_lr_test(ds)
            _, se_t = ttest_se_residual_corr(ds, fits)
            cols["p_serial"][k] = serial.p_value
            cols["p_corr"][k] = corr.p_value
            cols["p_naive"][k] = naive.p_value
            cols["se_boot"][k] = bootstrap_se_rho(rho, draws)
            cols["se_ttest"][k] = se_t
            cols["rho"][k] = rho
        except PanelDiagError:
            failed[k] = True
    return cols, failed


def _run_worker(args):
    return _run_block(*args)


def run_simulation(cfg, workers=1):
    """Full scenario: R independent runs, each simulating a panel, fitting
    both years, and computing the two proposed tests plus both comparators."""
    x = design_matrix(cfg)
    if workers <= 1 or cfg.R < 4:
        parts = [_run_block(cfg, x, 1, cfg.R + 1)]
    else:
        bounds = np.linspace(1, cfg.R + 1, workers + 1).astype(int)
        jobs = [(cfg, x, int(lo), int(hi))
                for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_worker, jobs))
    merged = {k: np.concatenate([p[0][k] for p in parts])
              for k in parts[0][0]}
    failed = np.concatenate([p[1] for p in parts])
    return SimResult(p_serial=merged["p_serial"], p_corr=merged["p_corr"],
                     p_naive=merged["p_naive"], se_boot=merged["se_boot"],
                     se_ttest=merged["se_ttest"], rho=merged["rho"],
                     failed=failed, config=cfg)


def parse_sim_config(text):
    """Parse the key = value scenario file format.

    Recognized keys: n_per_year, q, B, R, seed, duplicate_factor,
    gamma_true (comma-separated reals), covariate_file. Lines starting with
    '#' are comments. gamma_true is required unless a covariate_file with a
    matching default is given.
    """
    values = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DomainError(f"sim config line {line_no}: expected key = value")
        key, _, val = line.partition("=")
        values[key.strip()] = val.strip()
    try:
        gamma = values.get("gamma_true")
        cfg = SimConfig(
            gamma_true=tuple(float(v) for v in gamma.split(","))
            if gamma else tuple(DEFAULT_GAMMA_SYNTHETIC),
            q=float(values.get("q", "0")),
            n_per_year=int(values["n_per_year"]),
            B=int(values.get("B", "1000")),
            R=int(values.get("R", "1000")),
            seed=int(values.get("seed", "0")),
            duplicate_factor=int(values.get("duplicate_factor", "1")),
            covariate_file=values.get("covariate_file"),
        )
    except KeyError as exc:
        raise DomainError(f"sim config missing key {exc.args[0]!r}") from None
    except ValueError as exc:
        raise DomainError(f"sim config: {exc}") from None
    unknown = set(values) - {"gamma_true", "q", "n_per_year", "B", "R",
                             "seed", "duplicate_factor", "covariate_file"}
    if unknown:
        raise DomainError(f"sim config has unknown keys {sorted(unknown)}")
    return cfg

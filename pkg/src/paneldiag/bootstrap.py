"""Randomly weighted bootstrap: one weight per subject shared across all
years of a replicate, reused by both test families.

Each replicate b draws its weights from an independent counter-based stream
keyed by (seed, b), so results are identical for any execution order or
worker count, and replicates can run in parallel without a shared generator.
"""

import io
import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import backend
from .errors import DomainError, TooManyFailures
from .logit import GAMMA_CAP, MAX_ITER, TOL_GRAD, TOL_STEP, clip_probs

MAX_FAILURE_RATE = 0.05


def year_pairs(T):
    """Fixed global pair order (1,2),(1,3),...,(T-1,T)."""
    return [(s, t) for s in range(1, T + 1) for t in range(s + 1, T + 1)]


def _exponential_law(rng, n):
    return rng.standard_exponential(n)


def _unit_law(rng, n):
    # degenerate all-ones law; testing hook only (mean 1, variance 0)
    return np.ones(n)


WEIGHT_LAWS = {"standard-exponential": _exponential_law}
_TEST_LAWS = {"unit": _unit_law}


@dataclass(frozen=True)
class BootstrapPlan:
    """Replicate count, master seed and multiplier-weight law."""

    B: int
    seed: int
    weight_law: str = "standard-exponential"

    def __post_init__(self):
        if self.B < 2:
            raise DomainError(f"B must be >= 2, got {self.B}")
        if self.weight_law not in WEIGHT_LAWS and \
                self.weight_law not in _TEST_LAWS:
            raise DomainError(f"unknown weight law {self.weight_law!r}")

    def law(self):
        return WEIGHT_LAWS.get(self.weight_law) or _TEST_LAWS[self.weight_law]


def draw_weights(n, b, plan):
    """Weights for replicate b: n iid draws from the plan's law.

    Deterministic in (n, b, seed) via a Philox stream keyed by the pair, so
    the same vector comes back regardless of call order or thread.
    """
    if not 1 <= b <= plan.B:
        raise DomainError(f"replicate index {b} outside 1..{plan.B}")
    key = np.random.SeedSequence([int(plan.seed), int(b)])
    rng = np.random.Generator(np.random.Philox(key))
    return plan.law()(rng, n)


@dataclass
class ReplicateDraws:
    """All per-replicate quantities: gammas (B,T,P+1), rhos (B,npairs).

    Failed replicates (any non-converged year fit) are flagged and excluded
    from every downstream covariance sum.
    """

    gammas: np.ndarray
    rhos: np.ndarray
    failures: np.ndarray
    pair_order: list = field(default_factory=list)

    @property
    def B(self):
        return self.gammas.shape[0]

    @property
    def B_used(self):
        return int(np.sum(~self.failures))

    @property
    def usable(self):
        return ~self.failures

    def pair_index(self, s, t):
        key = (min(s, t), max(s, t))
        return self.pair_order.index(key)


def _replicate_block(ds, base_gammas, plan, b_lo, b_hi, capture=None):
    """Run replicates b_lo..b_hi-1 (1-based, half-open) into fresh arrays."""
    T = ds.T
    m = ds.P + 1
    pairs = year_pairs(T)
    nb = b_hi - b_lo
    gammas = np.zeros((nb, T, m))
    rhos = np.zeros((nb, len(pairs)))
    failures = np.zeros(nb, dtype=bool)

    designs = {t: ds.design(t) for t in range(1, T + 1)}
    zs = {t: ds.z[t] for t in range(1, T + 1)}
    cohorts = {t: ds.cohort(t) for t in range(1, T + 1)}
    pair_idx = {(s, t): ds.pair_cohort(s, t) for s, t in pairs}

    resid = {}
    for k, b in enumerate(range(b_lo, b_hi)):
        w = draw_weights(ds.n, b, plan)
        if capture is not None:
            capture.append((b, w))
        ok = True
        for t in range(1, T + 1):
            gamma, p, _, _, _, status = backend.newton_logit(
                designs[t], zs[t], np.ascontiguousarray(w[cohorts[t]]),
                base_gammas[t - 1], TOL_GRAD, TOL_STEP, MAX_ITER, GAMMA_CAP)
            if status != backend.STATUS_CONVERGED:
                ok = False
                break
            gammas[k, t - 1] = gamma
            pc = clip_probs(p)
            resid[t] = (zs[t] - pc) / np.sqrt(pc * (1.0 - pc))
        if not ok:
            failures[k] = True
            continue
        for j, (s, t) in enumerate(pairs):
            idx, pos_s, pos_t = pair_idx[(s, t)]
            if len(idx) == 0:
                rhos[k, j] = np.nan
                continue
            acc = backend.weighted_residual_cross(
                np.ascontiguousarray(w[idx]),
                np.ascontiguousarray(resid[s][pos_s]),
                np.ascontiguousarray(resid[t][pos_t]))
            rhos[k, j] = acc / len(idx)
    return gammas, rhos, failures


def run_replicates(ds, base_fits, plan, workers=1, capture=None):
    """Draw B replicates: refit every year under shared weights and compute
    every pairwise bootstrapped residual correlation.

    ``base_fits`` maps year -> LogitFit (all converged); bootstrap fits warm
    start from the base estimates. Aborts with TooManyFailures when more than
    5% of replicates fail to fit.
    """
    T = ds.T
    for t in range(1, T + 1):
        if not base_fits[t].converged:
            raise DomainError(f"base fit for year {t} did not converge")
    base_gammas = np.array([base_fits[t].gamma for t in range(1, T + 1)])
    pairs = year_pairs(T)

    if workers <= 1 or plan.B < 4:
        gammas, rhos, failures = _replicate_block(
            ds, base_gammas, plan, 1, plan.B + 1, capture=capture)
    else:
        bounds = np.linspace(1, plan.B + 1, workers + 1).astype(int)
        jobs = [(ds, base_gammas, plan, int(lo), int(hi))
                for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_replicate_worker, jobs))
        gammas = np.concatenate([p[0] for p in parts])
        rhos = np.concatenate([p[1] for p in parts])
        failures = np.concatenate([p[2] for p in parts])

    draws = ReplicateDraws(gammas=gammas, rhos=rhos, failures=failures,
                           pair_order=pairs)
    n_failed = int(np.sum(failures))
    if n_failed > MAX_FAILURE_RATE * plan.B:
        raise TooManyFailures(
            f"{n_failed} of {plan.B} bootstrap replicates failed to fit")
    return draws


def _replicate_worker(args):
    return _replicate_block(*args)


def scatter_about(draws, center):
    """S = sum_b (v_b - center)(v_b - center)^T over the rows of ``draws``."""
    v = np.asarray(draws, dtype=float)
    center = np.asarray(center, dtype=float)
    if v.ndim != 2 or v.shape[1] != len(center):
        raise DomainError("draws must be B x k with k matching the center")
    if v.shape[0] < 2:
        raise DomainError("need at least 2 usable replicates")
    d = v - center
    return d.T @ d


def dump_gammas_csv(draws):
    """Audit dump: one row per (replicate, year, coefficient index)."""
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["b", "year", "coef_index", "value"])
    B, T, m = draws.gammas.shape
    for b in range(B):
        for t in range(T):
            for j in range(m):
                w.writerow([b + 1, t + 1, j, repr(draws.gammas[b, t, j])])
    return out.getvalue()


def dump_rhos_csv(draws):
    """Audit dump: one row per (replicate, year pair)."""
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["b", "s", "t", "rho_b"])
    for b in range(draws.B):
        for j, (s, t) in enumerate(draws.pair_order):
            w.writerow([b + 1, s, t, repr(draws.rhos[b, j])])
    return out.getvalue()

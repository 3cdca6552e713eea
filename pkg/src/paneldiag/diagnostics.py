"""Serial dynamic and correlation test statistics with chi-squared p-values.

All statistics are computed in the cancelled form B * v' S^{-1} v, where S is
the raw scatter of bootstrap replicates about the point estimate. This is
algebraically identical to the n-scaled quadratic forms (the n's cancel) and
sidesteps any ambiguity about what "n" means for an imbalanced panel.
"""

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bootstrap import scatter_about, year_pairs
from .errors import (DegenerateMarginal, DomainError, EmptyIntersection,
                     NotPositiveDefinite, SingularCovariance, ZeroVariance)
from .logit import clip_probs
from .numkit import chisq_sf, quad_form_inv

KIND_SERIAL_AGGREGATE = "serial_aggregate"
KIND_SERIAL_PAIRWISE = "serial_pairwise"
KIND_CORR_AGGREGATE = "corr_aggregate"
KIND_CORR_PAIRWISE = "corr_pairwise"


@dataclass
class TestReport:
    """One test's statistic, degrees of freedom and p-value."""

    kind: str
    statistic: float
    df: int
    p_value: float
    B_used: int
    pair: Optional[tuple] = None

    def to_dict(self):
        d = {"kind": self.kind, "statistic": self.statistic, "df": self.df,
             "p_value": self.p_value, "B_used": self.B_used}
        if self.pair is not None:
            d["pair"] = list(self.pair)
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


@dataclass
class ResidualCorrelations:
    """Residual and raw pairwise correlations in the fixed pair order."""

    rho: np.ndarray
    raw: np.ndarray
    pair_order: list


def _residual_series(ds, fits, t):
    pc = clip_probs(_fitted_probs(ds, fits, t))
    return (ds.z[t] - pc) / np.sqrt(pc * (1.0 - pc))


def _fitted_probs(ds, fits, t):
    eta = ds.design(t) @ fits[t].gamma
    return np.where(eta >= 0, 1.0 / (1.0 + np.exp(-np.abs(eta))),
                    np.exp(-np.abs(eta)) / (1.0 + np.exp(-np.abs(eta))))


def residual_correlation(ds, fits, s, t):
    """Mean product of standardized residuals over A_s ∩ A_t."""
    if s == t:
        raise DomainError("residual correlation needs two distinct years")
    idx, pos_s, pos_t = ds.pair_cohort(s, t)
    if len(idx) < 2:
        raise EmptyIntersection(f"years ({s},{t}) share {len(idx)} subjects")
    rs = _residual_series(ds, fits, s)[pos_s]
    rt = _residual_series(ds, fits, t)[pos_t]
    return float(np.sum(rs * rt) / len(idx))


def raw_sample_correlation(ds, s, t):
    """Pearson correlation of the paired claim indicators over A_s ∩ A_t."""
    idx, pos_s, pos_t = ds.pair_cohort(s, t)
    if len(idx) < 2:
        raise EmptyIntersection(f"years ({s},{t}) share {len(idx)} subjects")
    zs = ds.z[s][pos_s]
    zt = ds.z[t][pos_t]
    if np.all(zs == zs[0]) or np.all(zt == zt[0]):
        raise DegenerateMarginal(
            f"constant indicator on the ({s},{t}) intersection")
    zs_c = zs - zs.mean()
    zt_c = zt - zt.mean()
    return float((zs_c @ zt_c) /
                 np.sqrt((zs_c @ zs_c) * (zt_c @ zt_c)))


def all_residual_correlations(ds, fits):
    """ResidualCorrelations across every pair, fixed order."""
    pairs = year_pairs(ds.T)
    rho = np.array([residual_correlation(ds, fits, s, t) for s, t in pairs])
    raw = np.array([raw_sample_correlation(ds, s, t) for s, t in pairs])
    return ResidualCorrelations(rho=rho, raw=raw, pair_order=pairs)


def _gamma_contrast(fits, T):
    """(gamma_2 - gamma_1, ..., gamma_T - gamma_1), stacked ascending in t."""
    base = fits[1].gamma
    return np.concatenate([fits[t].gamma - base for t in range(2, T + 1)])


def _replicate_contrasts(draws):
    g = draws.gammas[draws.usable]
    return (g[:, 1:, :] - g[:, :1, :]).reshape(g.shape[0], -1)


def _quadratic_report(kind, v, replicate_vs, B_used, df, pair=None):
    if B_used < 2:
        raise DomainError("need at least 2 usable replicates")
    if np.allclose(v, 0.0) and np.allclose(replicate_vs, 0.0):
        # identically-zero contrast: statistic 0 without touching a singular S
        return TestReport(kind=kind, statistic=0.0, df=df, p_value=1.0,
                          B_used=B_used, pair=pair)
    S = scatter_about(replicate_vs, v)
    try:
        stat = B_used * quad_form_inv(S, v)
    except NotPositiveDefinite as exc:
        cond = _condition_estimate(S)
        raise SingularCovariance(
            f"bootstrap scatter singular at pivot {exc.pivot_index} "
            f"(condition estimate {cond:.3e}); B may be too small or the "
            "design rank-deficient", condition=cond) from exc
    return TestReport(kind=kind, statistic=float(stat), df=df,
                      p_value=chisq_sf(float(stat), df), B_used=B_used,
                      pair=pair)


def _condition_estimate(S):
    d = np.abs(np.diag(S))
    lo = np.min(d)
    return float(np.max(d) / lo) if lo > 0 else float("inf")


def serial_dynamic_aggregate(fits, draws):
    """Aggregated serial dynamic test; df = (T-1)(P+1)."""
    T = draws.gammas.shape[1]
    m = draws.gammas.shape[2]
    v = _gamma_contrast(fits, T)
    reps = _replicate_contrasts(draws)
    return _quadratic_report(KIND_SERIAL_AGGREGATE, v, reps, draws.B_used,
                             df=(T - 1) * m)


def serial_dynamic_pairwise(fits, draws, s, t):
    """Pairwise serial dynamic test for years (s, t); df = P+1."""
    if s == t:
        raise DomainError("pairwise test needs two distinct years")
    m = draws.gammas.shape[2]
    v = fits[s].gamma - fits[t].gamma
    g = draws.gammas[draws.usable]
    reps = g[:, s - 1, :] - g[:, t - 1, :]
    return _quadratic_report(KIND_SERIAL_PAIRWISE, v, reps, draws.B_used,
                             df=m, pair=(min(s, t), max(s, t)))


def correlation_pairwise(rho, draws, s, t):
    """Pairwise correlation test for years (s, t); df = 1."""
    j = draws.pair_index(s, t)
    reps = draws.rhos[draws.usable, j]
    if draws.B_used < 2:
        raise DomainError("need at least 2 usable replicates")
    spread = float(np.sum((reps - rho) ** 2))
    if spread <= 0.0:
        if rho == 0.0:
            return TestReport(kind=KIND_CORR_PAIRWISE, statistic=0.0, df=1,
                              p_value=1.0, B_used=draws.B_used,
                              pair=(min(s, t), max(s, t)))
        raise ZeroVariance(f"bootstrap correlations for ({s},{t}) are constant")
    stat = draws.B_used * rho * rho / spread
    return TestReport(kind=KIND_CORR_PAIRWISE, statistic=float(stat), df=1,
                      p_value=chisq_sf(float(stat), 1), B_used=draws.B_used,
                      pair=(min(s, t), max(s, t)))


def correlation_aggregate(rhos, draws):
    """Aggregated correlation test; df = T(T-1)/2."""
    v = np.asarray(rhos.rho if isinstance(rhos, ResidualCorrelations) else rhos,
                   dtype=float)
    reps = draws.rhos[draws.usable]
    return _quadratic_report(KIND_CORR_AGGREGATE, v, reps, draws.B_used,
                             df=len(v))

"""Diagnostic tests for longitudinal binary-claim panel data.

Two test families run before any longitudinal model is fitted: a serial
dynamic test for structural change of the per-year logistic regression
parameters, and a correlation test for conditional independence of the
claim indicators across years. Both quantify estimation uncertainty with a
randomly weighted bootstrap and refer their statistics to chi-squared laws.

The hot fitting kernel is a compiled extension when available, with a pure
numpy fallback; see :mod:`paneldiag.backend`.
"""

__version__ = "0.1.0"

from .backend import BACKEND
from .bootstrap import (BootstrapPlan, ReplicateDraws, draw_weights,
                        run_replicates, scatter_about, year_pairs)
from .diagnostics import (ResidualCorrelations, TestReport,
                          all_residual_correlations, correlation_aggregate,
                          correlation_pairwise, raw_sample_correlation,
                          residual_correlation, serial_dynamic_aggregate,
                          serial_dynamic_pairwise)
from .logit import (LogitFit, fit_weighted_logit, loglik_grad_hess,
                    predict_prob)
from .numkit import SpdMatrix, chisq_sf, quad_form_inv, spd_solve
from .panel import (CovariateSchema, PanelDataset, PanelRecord, PanelSummary,
                    cohort_sizes, load_panel, summarize, validate_design)
from .sim import (SimConfig, SimResult, naive_lr_test, parse_sim_config,
                  rejection_rates, run_simulation, simulate_panel,
                  ttest_se_residual_corr)

__all__ = [
    "BACKEND", "BootstrapPlan", "CovariateSchema", "LogitFit",
    "PanelDataset", "PanelRecord", "PanelSummary", "ReplicateDraws",
    "ResidualCorrelations", "SimConfig", "SimResult", "SpdMatrix",
    "TestReport", "all_residual_correlations", "chisq_sf", "cohort_sizes",
    "correlation_aggregate", "correlation_pairwise", "draw_weights",
    "fit_weighted_logit", "load_panel", "loglik_grad_hess", "naive_lr_test",
    "parse_sim_config", "predict_prob", "quad_form_inv",
    "raw_sample_correlation", "rejection_rates", "residual_correlation",
    "run_replicates", "run_simulation", "scatter_about",
    "serial_dynamic_aggregate", "serial_dynamic_pairwise", "simulate_panel",
    "spd_solve", "summarize", "ttest_se_residual_corr", "validate_design",
    "year_pairs",
]

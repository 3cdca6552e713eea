"""Tests for the per-year weighted logistic fits: gradient conditions,
finite-difference agreement and an independent small-scale Newton oracle."""

import numpy as np
import pytest
import scipy.optimize

from paneldiag.errors import DomainError, Separation
from paneldiag.logit import (LogitFit, clip_probs, fit_weighted_logit,
                             loglik_grad_hess, predict_prob)
from paneldiag.panel import CovariateSchema, load_panel
from .conftest import make_panel_csv


def _random_panel(n, T, P, seed, drop_rate=0.15):
    text, schema = make_panel_csv(n=n, T=T, P=P, seed=seed,
                                  drop_rate=drop_rate)
    return load_panel(text, schema)


def _oracle_fit(xbar, z, w):
    """Independent MLE via scipy's BFGS on the negative weighted loglik."""

    def neg_ll(gamma):
        eta = xbar @ gamma
        sp = np.maximum(eta, 0.0) + np.log1p(np.exp(-np.abs(eta)))
        return -float(np.sum(w * (z * eta - sp)))

    def neg_grad(gamma):
        eta = xbar @ gamma
        p = 1.0 / (1.0 + np.exp(-eta))
        return -(xbar.T @ (w * (z - p)))

    res = scipy.optimize.minimize(neg_ll, np.zeros(xbar.shape[1]),
                                  jac=neg_grad, method="BFGS",
                                  options={"gtol": 1e-10, "maxiter": 500})
    # polish to full precision with plain numpy Newton steps
    gamma = res.x
    for _ in range(8):
        eta = xbar @ gamma
        p = 1.0 / (1.0 + np.exp(-eta))
        grad = xbar.T @ (w * (z - p))
        info = (xbar * (w * p * (1 - p))[:, None]).T @ xbar
        gamma = gamma + np.linalg.solve(info, grad)
        if np.max(np.abs(grad)) < 1e-12:
            break
    return gamma


class TestFitProperties:
    def test_gradient_vanishes_at_solution(self):
        for seed in range(10):
            ds = _random_panel(80, 2, 2, seed)
            for t in (1, 2):
                fit = fit_weighted_logit(ds, t)
                assert fit.converged
                _, grad, _ = loglik_grad_hess(ds, t, None, fit.gamma)
                assert np.max(np.abs(grad)) <= 1e-8

    def test_matches_independent_oracle_small_instances(self):
        hits = 0
        seed = 0
        while hits < 20:
            seed += 1
            rng = np.random.default_rng(seed)
            n = int(rng.integers(25, 51))
            P = int(rng.integers(1, 3))
            text, schema = make_panel_csv(n=n, T=2, P=P, seed=seed,
                                          drop_rate=0.0)
            ds = load_panel(text, schema)
            try:
                fit = fit_weighted_logit(ds, 1)
            except Separation:
                continue  # oracle comparison needs a finite MLE
            oracle = _oracle_fit(ds.design(1), ds.z[1], np.ones(ds.n_t(1)))
            assert np.max(np.abs(fit.gamma - oracle)) <= 1e-8
            hits += 1

    def test_analytic_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(99)
        h = 1e-6
        for case in range(50):
            ds = _random_panel(60, 2, 2, 1000 + case)
            t = 1 + case % 2
            gamma = rng.normal(scale=0.8, size=ds.P + 1)
            w = rng.standard_exponential(ds.n)
            ll, grad, hess = loglik_grad_hess(ds, t, w, gamma)
            for j in range(len(gamma)):
                e = np.zeros_like(gamma)
                e[j] = h
                ll_p = loglik_grad_hess(ds, t, w, gamma + e)[0]
                ll_m = loglik_grad_hess(ds, t, w, gamma - e)[0]
                fd = (ll_p - ll_m) / (2 * h)
                assert grad[j] == pytest.approx(
                    fd, rel=1e-5, abs=1e-5 * (1 + abs(fd)))

    def test_hessian_matches_gradient_differences(self):
        ds = _random_panel(60, 2, 2, 123)
        rng = np.random.default_rng(5)
        gamma = rng.normal(scale=0.5, size=3)
        h = 1e-6
        _, _, hess = loglik_grad_hess(ds, 1, None, gamma)
        for j in range(3):
            e = np.zeros(3)
            e[j] = h
            g_p = loglik_grad_hess(ds, 1, None, gamma + e)[1]
            g_m = loglik_grad_hess(ds, 1, None, gamma - e)[1]
            fd_col = (g_p - g_m) / (2 * h)
            assert np.allclose(hess[:, j], fd_col, rtol=1e-4, atol=1e-4)

    def test_unit_weights_equal_default(self, two_year_panel):
        a = fit_weighted_logit(two_year_panel, 1)
        b = fit_weighted_logit(two_year_panel, 1,
                               w=np.ones(two_year_panel.n))
        assert np.array_equal(a.gamma, b.gamma)

    def test_weighting_moves_estimate(self, two_year_panel):
        rng = np.random.default_rng(2)
        w = rng.standard_exponential(two_year_panel.n)
        a = fit_weighted_logit(two_year_panel, 1)
        b = fit_weighted_logit(two_year_panel, 1, w=w)
        assert not np.allclose(a.gamma, b.gamma)

    def test_warm_start_same_solution(self, two_year_panel):
        a = fit_weighted_logit(two_year_panel, 1)
        b = fit_weighted_logit(two_year_panel, 1, warm_start=a.gamma)
        assert np.max(np.abs(a.gamma - b.gamma)) <= 1e-8
        assert b.iterations <= a.iterations

    def test_se_matches_inverse_information_oracle(self, two_year_panel):
        fit = fit_weighted_logit(two_year_panel, 1)
        _, _, hess = loglik_grad_hess(two_year_panel, 1, None, fit.gamma)
        expected = np.sqrt(np.diag(np.linalg.inv(-hess)))
        assert np.allclose(fit.se, expected, rtol=1e-9)


class TestFailureModes:
    def test_separation_detected(self):
        # z = 1 exactly when x1 > 0: complete separation
        lines = ["subject_id,year,z,x1"]
        for i, x in enumerate(np.linspace(-2, 2, 30)):
            z = int(x > 0)
            lines.append(f"s{i},2001,{z},{float(x)!r}")
            lines.append(f"s{i},2002,{z},{float(x)!r}")
        text = "\n".join(lines) + "\n"
        ds = load_panel(text, CovariateSchema.all_continuous(("x1",)))
        with pytest.raises(Separation):
            fit_weighted_logit(ds, 1)

    def test_negative_weights_rejected(self, two_year_panel):
        w = np.ones(two_year_panel.n)
        w[0] = -1.0
        with pytest.raises(DomainError):
            fit_weighted_logit(two_year_panel, 1, w=w)

    def test_all_zero_weights_rejected(self, two_year_panel):
        with pytest.raises(DomainError):
            fit_weighted_logit(two_year_panel, 1,
                               w=np.zeros(two_year_panel.n))

    def test_wrong_weight_length_rejected(self, two_year_panel):
        with pytest.raises(DomainError):
            fit_weighted_logit(two_year_panel, 1, w=np.ones(3))


class TestSmallHelpers:
    def test_predict_prob_known_values(self):
        assert predict_prob([0.0], np.array([])) == pytest.approx(0.5)
        assert predict_prob([1.0, 2.0], [1.0]) == pytest.approx(
            1.0 / (1.0 + np.exp(-3.0)))
        assert 0.0 < predict_prob([-800.0], np.array([])) < 1e-300 or \
            predict_prob([-800.0], np.array([])) == 0.0

    def test_predict_prob_length_check(self):
        with pytest.raises(DomainError):
            predict_prob([1.0, 2.0], [1.0, 2.0])

    def test_clip_probs_bounds(self):
        p = clip_probs(np.array([0.0, 0.5, 1.0]))
        assert p[0] > 0.0 and p[2] < 1.0 and p[1] == 0.5

    def test_fit_json_shape(self, two_year_panel):
        fit = fit_weighted_logit(two_year_panel, 1)
        import json
        d = json.loads(fit.to_json(names=two_year_panel.schema.names,
                                   year_label=2001))
        assert d["year"] == 2001
        assert [c["name"] for c in d["coefficients"]] == \
            ["Intercept", "x1", "x2"]
        assert d["converged"] is True

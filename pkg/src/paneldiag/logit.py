"""Per-year weighted logistic regression by Newton iteration.

The optimizer itself lives in the kernel backends; this module owns the
public contract: preconditions, error translation, standard errors and
serialization of fits.
"""

import json
from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import DomainError, NoConvergence, Separation, SingularHessian
from .numkit import SpdMatrix, spd_inverse_diagonal

TOL_GRAD = 1e-8
TOL_STEP = 1e-10
MAX_ITER = 100
GAMMA_CAP = 30.0
PROB_CLIP = 1e-10  # residual denominators must stay away from 0


@dataclass
class LogitFit:
    """Result of one per-year fit: gamma = (intercept, beta...)."""

    gamma: np.ndarray
    se: np.ndarray
    loglik: float
    iterations: int
    converged: bool
    grad_norm: float
    year: int = 0

    def to_json(self, names=None, year_label=None):
        m = len(self.gamma)
        if names is None:
            names = [f"x{j}" for j in range(1, m)]
        labels = ["Intercept"] + list(names)
        return json.dumps({
            "year": year_label if year_label is not None else self.year,
            "coefficients": [
                {"name": labels[j], "estimate": self.gamma[j],
                 "se": self.se[j]} for j in range(m)
            ],
            "loglik": self.loglik,
            "iterations": self.iterations,
            "converged": self.converged,
        }, indent=2, sort_keys=True)


def predict_prob(gamma, x):
    """p = exp(a + b.x) / (1 + exp(a + b.x)), overflow-free, in (0, 1)."""
    gamma = np.asarray(gamma, dtype=float)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if len(gamma) != len(x) + 1:
        raise DomainError(
            f"gamma has {len(gamma)} entries, expected {len(x) + 1}")
    eta = gamma[0] + float(gamma[1:] @ x)
    if eta >= 0:
        return 1.0 / (1.0 + np.exp(-eta))
    e = np.exp(eta)
    return e / (1.0 + e)


def clip_probs(p):
    """Clip fitted probabilities for use in residual denominators."""
    return np.clip(p, PROB_CLIP, 1.0 - PROB_CLIP)


def _raise_for_status(status, grad_norm, iterations, p=None, z=None):
    if status == backend.STATUS_SEPARATION:
        raise Separation("fitted coefficients diverged (complete separation)")
    if status == backend.STATUS_SINGULAR:
        raise SingularHessian("negative Hessian is numerically singular")
    if status == backend.STATUS_NO_CONVERGENCE:
        # a perfectly classified point driven onto the boundary is separation,
        # not a tolerance problem
        if p is not None and z is not None:
            on_boundary = ((p <= 1e-12) & (z == 0)) | ((p >= 1 - 1e-12) & (z == 1))
            if np.any(on_boundary):
                raise Separation(
                    "fitted probabilities pinned at 0/1 for correctly "
                    "classified points before the gradient converged")
        raise NoConvergence(
            f"no convergence after {iterations} iterations "
            f"(max-abs gradient {grad_norm:.3e})")


def fit_weighted_logit(ds, t, w=None, warm_start=None):
    """Fit year t of a panel, optionally with per-subject weights.

    ``w`` is indexed by the subject universe (length ds.n); unit weights when
    omitted. Raises Separation / NoConvergence / SingularHessian on failure.
    """
    xbar = ds.design(t)
    z = ds.z[t]
    if w is None:
        w_year = np.ones(len(z))
    else:
        w = np.asarray(w, dtype=float)
        if len(w) != ds.n:
            raise DomainError(f"weight vector has length {len(w)}, need {ds.n}")
        if np.any(w < 0):
            raise DomainError("weights must be nonnegative")
        w_year = np.ascontiguousarray(w[ds.cohort(t)])
        if not np.any(w_year > 0):
            raise DomainError(f"all weights vanish on year {t}'s cohort")
    gamma0 = np.zeros(xbar.shape[1]) if warm_start is None else \
        np.asarray(warm_start, dtype=float)
    gamma, p, ll, grad_norm, iters, status = backend.newton_logit(
        xbar, z, w_year, gamma0, TOL_GRAD, TOL_STEP, MAX_ITER, GAMMA_CAP)
    _raise_for_status(status, grad_norm, iters, p=p, z=z)

    hess = (xbar * (w_year * p * (1.0 - p))[:, None]).T @ xbar
    se = np.sqrt(spd_inverse_diagonal(SpdMatrix(hess)))
    return LogitFit(gamma=gamma, se=se, loglik=ll, iterations=iters,
                    converged=True, grad_norm=grad_norm, year=t)


def loglik_grad_hess(ds, t, w, gamma):
    """Analytic (loglik, gradient, Hessian) of the weighted objective at gamma.

    The Hessian returned is the actual second derivative (negative
    semidefinite); exposed for finite-difference checking.
    """
    xbar = ds.design(t)
    z = ds.z[t]
    if w is None:
        w_year = np.ones(len(z))
    else:
        w_year = np.asarray(w, dtype=float)[ds.cohort(t)]
    gamma = np.asarray(gamma, dtype=float)
    eta = xbar @ gamma
    p = np.where(eta >= 0, 1.0 / (1.0 + np.exp(-np.abs(eta))),
                 np.exp(-np.abs(eta)) / (1.0 + np.exp(-np.abs(eta))))
    sp = np.maximum(eta, 0.0) + np.log1p(np.exp(-np.abs(eta)))
    ll = float(np.sum(w_year * (z * eta - sp)))
    grad = xbar.T @ (w_year * (z - p))
    hess = -(xbar * (w_year * p * (1.0 - p))[:, None]).T @ xbar
    return ll, grad, hess

"""Pure-Python (numpy) twin of the compiled Newton kernel.

Same signature and status codes as ``_kernel``; selected at import time when
the compiled extension is unavailable or explicitly disabled.
"""

import numpy as np

BACKEND_NAME = "python"

STATUS_CONVERGED = 0
STATUS_NO_CONVERGENCE = 1
STATUS_SEPARATION = 2
STATUS_SINGULAR = 3


def _sigmoid(eta):
    out = np.empty_like(eta)
    pos = eta >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-eta[pos]))
    e = np.exp(eta[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _loglik(eta, z, w):
    # z*eta - softplus(eta), with softplus computed overflow-free
    sp = np.maximum(eta, 0.0) + np.log1p(np.exp(-np.abs(eta)))
    return float(np.sum(w * (z * eta - sp)))


def _chol_solve(a, b):
    """Solve a x = b via Cholesky with a relative pivot floor; None if singular."""
    m = a.shape[0]
    L = np.zeros_like(a)
    max_pivot = 0.0
    for j in range(m):
        s = a[j, j] - L[j, :j] @ L[j, :j]
        max_pivot = max(max_pivot, abs(s))
        if s <= 1e-12 * max_pivot or s <= 0.0:
            return None
        L[j, j] = np.sqrt(s)
        if j + 1 < m:
            L[j + 1:, j] = (a[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / L[j, j]
    y = np.empty(m)
    for i in range(m):
        y[i] = (b[i] - L[i, :i] @ y[:i]) / L[i, i]
    x = np.empty(m)
    for i in range(m - 1, -1, -1):
        x[i] = (y[i] - L[i + 1:, i] @ x[i + 1:]) / L[i, i]
    return x


def newton_logit(X, z, w, gamma0, tol_grad=1e-8, tol_step=1e-10,
                 max_iter=100, gamma_cap=30.0):
    """Maximize sum_i w_i [z_i log p_i + (1-z_i) log(1-p_i)] by Newton steps.

    Returns (gamma, p, loglik, grad_norm, iterations, status).
    """
    X = np.asarray(X, dtype=float)
    z = np.asarray(z, dtype=float)
    w = np.asarray(w, dtype=float)
    gamma = np.array(gamma0, dtype=float, copy=True)

    eta = X @ gamma
    p = _sigmoid(eta)
    ll = _loglik(eta, z, w)
    status = STATUS_NO_CONVERGENCE
    it = 0
    grad = X.T @ (w * (z - p))
    for it in range(1, max_iter + 1):
        grad_norm = float(np.max(np.abs(grad)))
        if grad_norm <= tol_grad:
            status = STATUS_CONVERGED
            break
        hess = (X * (w * p * (1.0 - p))[:, None]).T @ X
        step = _chol_solve(hess, grad)
        if step is None:
            status = STATUS_SINGULAR
            break
        alpha = 1.0
        improved = False
        for _ in range(31):
            trial = gamma + alpha * step
            eta = X @ trial
            ll_new = _loglik(eta, z, w)
            if ll_new >= ll - 1e-12 * (1.0 + abs(ll)):
                improved = True
                break
            alpha *= 0.5
        if not improved:
            status = STATUS_NO_CONVERGENCE
            break
        step_norm = float(np.max(np.abs(trial - gamma)))
        gamma = trial
        p = _sigmoid(eta)
        ll = ll_new
        grad = X.T @ (w * (z - p))
        if np.max(np.abs(gamma)) > gamma_cap:
            status = STATUS_SEPARATION
            break
        if step_norm <= tol_step:
            status = STATUS_CONVERGED
            break
    grad_norm = float(np.max(np.abs(grad)))
    return gamma, p, ll, grad_norm, it, status


def weighted_residual_cross(delta, rs, rt):
    """sum_i delta_i * rs_i * rt_i over a pair intersection."""
    return float(np.sum(np.asarray(delta) * np.asarray(rs) * np.asarray(rt)))

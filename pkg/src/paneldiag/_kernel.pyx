# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled Newton solver for weighted Bernoulli-logit likelihoods.

This is the hot kernel: bootstrap replication refits the same small logistic
regression hundreds of thousands of times, so the whole iteration (pass over
rows, Cholesky of the (P+1)x(P+1) negative Hessian, step-halving) runs in C.
The pure-Python twin lives in ``_kernel_py`` with an identical signature.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs, log1p, sqrt

cnp.import_array()

BACKEND_NAME = "cython"

cdef enum:
    _CONVERGED = 0
    _NO_CONVERGENCE = 1
    _SEPARATION = 2
    _SINGULAR = 3

STATUS_CONVERGED = _CONVERGED
STATUS_NO_CONVERGENCE = _NO_CONVERGENCE
STATUS_SEPARATION = _SEPARATION
STATUS_SINGULAR = _SINGULAR

DEF MAX_DIM = 64


cdef double _pass(const double[:, ::1] X, const double[::1] z,
                  const double[::1] w, const double[::1] gamma,
                  double[::1] p, double[::1] grad, double[:, ::1] hess,
                  bint with_derivs) noexcept nogil:
    """One sweep over rows: log-likelihood and (optionally) gradient/Hessian."""
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t m = X.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double eta, pi, wi, resid, var, ll = 0.0
    if with_derivs:
        for j in range(m):
            grad[j] = 0.0
            for k in range(m):
                hess[j, k] = 0.0
    for i in range(n):
        wi = w[i]
        eta = 0.0
        for j in range(m):
            eta += X[i, j] * gamma[j]
        if eta >= 0.0:
            pi = 1.0 / (1.0 + exp(-eta))
            ll += wi * (z[i] * eta - eta - log1p(exp(-eta)))
        else:
            pi = exp(eta) / (1.0 + exp(eta))
            ll += wi * (z[i] * eta - log1p(exp(eta)))
        p[i] = pi
        if with_derivs:
            resid = wi * (z[i] - pi)
            var = wi * pi * (1.0 - pi)
            for j in range(m):
                grad[j] += resid * X[i, j]
                for k in range(j, m):
                    hess[j, k] += var * X[i, j] * X[i, k]
    if with_derivs:
        for j in range(m):
            for k in range(j):
                hess[j, k] = hess[k, j]
    return ll


cdef int _chol_solve(double[:, ::1] a, double[::1] b, double[::1] x,
                     Py_ssize_t m) noexcept nogil:
    """Solve a x = b by in-place Cholesky; returns -1 on a failed pivot."""
    cdef Py_ssize_t i, j, k
    cdef double s, max_pivot = 0.0
    for j in range(m):
        s = a[j, j]
        for k in range(j):
            s -= a[j, k] * a[j, k]
        if fabs(s) > max_pivot:
            max_pivot = fabs(s)
        if s <= 1e-12 * max_pivot or s <= 0.0:
            return -1
        a[j, j] = sqrt(s)
        for i in range(j + 1, m):
            s = a[i, j]
            for k in range(j):
                s -= a[i, k] * a[j, k]
            a[i, j] = s / a[j, j]
    for i in range(m):
        s = b[i]
        for k in range(i):
            s -= a[i, k] * x[k]
        x[i] = s / a[i, i]
    for i in range(m - 1, -1, -1):
        s = x[i]
        for k in range(i + 1, m):
            s -= a[k, i] * x[k]
        x[i] = s / a[i, i]
    return 0


def newton_logit(const double[:, ::1] X, const double[::1] z,
                 const double[::1] w, const double[::1] gamma0,
                 double tol_grad=1e-8, double tol_step=1e-10,
                 int max_iter=100, double gamma_cap=30.0):
    """Maximize sum_i w_i [z_i log p_i + (1-z_i) log(1-p_i)] by Newton steps.

    X is the augmented design (intercept column first). Returns
    (gamma, p, loglik, grad_norm, iterations, status).
    """
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t m = X.shape[1]
    if m > MAX_DIM:
        raise ValueError(f"design has {m} columns, kernel supports <= {MAX_DIM}")

    gamma_arr = np.array(gamma0, dtype=np.float64, copy=True)
    p_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] gamma = gamma_arr
    cdef double[::1] p = p_arr
    cdef double grad_c[MAX_DIM]
    cdef double step_c[MAX_DIM]
    cdef double trial_c[MAX_DIM]
    cdef double hess_c[MAX_DIM * MAX_DIM]
    cdef double chol_c[MAX_DIM * MAX_DIM]
    cdef double[::1] grad = <double[:m]> (<double*> grad_c)
    cdef double[::1] step = <double[:m]> (<double*> step_c)
    cdef double[::1] trial = <double[:m]> (<double*> trial_c)
    cdef double[:, ::1] hess = <double[:m, :m]> (<double*> hess_c)
    cdef double[:, ::1] chol = <double[:m, :m]> (<double*> chol_c)

    cdef double ll, ll_new, grad_norm = 0.0, alpha, step_norm, g
    cdef Py_ssize_t it = 0, j, k, halvings
    cdef int status = _NO_CONVERGENCE
    cdef bint improved

    with nogil:
        ll = _pass(X, z, w, gamma, p, grad, hess, True)
        for it in range(1, max_iter + 1):
            grad_norm = 0.0
            for j in range(m):
                g = fabs(grad[j])
                if g > grad_norm:
                    grad_norm = g
            if grad_norm <= tol_grad:
                status = _CONVERGED
                break
            for j in range(m):
                for k in range(m):
                    chol[j, k] = hess[j, k]
            if _chol_solve(chol, grad, step, m) != 0:
                status = _SINGULAR
                break
            # step-halving: insist the weighted log-likelihood does not drop.
            # Derivatives are computed during the trial evaluation itself:
            # the first trial is almost always accepted, so this saves a
            # second sweep over the rows per iteration.
            alpha = 1.0
            improved = False
            for halvings in range(31):
                for j in range(m):
                    trial[j] = gamma[j] + alpha * step[j]
                ll_new = _pass(X, z, w, trial, p, grad, hess, True)
                if ll_new >= ll - 1e-12 * (1.0 + fabs(ll)):
                    improved = True
                    break
                alpha *= 0.5
            if not improved:
                status = _NO_CONVERGENCE
                break
            step_norm = 0.0
            for j in range(m):
                g = fabs(trial[j] - gamma[j])
                if g > step_norm:
                    step_norm = g
                gamma[j] = trial[j]
            ll = ll_new
            for j in range(m):
                if fabs(gamma[j]) > gamma_cap:
                    status = _SEPARATION
                    break
            if status == _SEPARATION:
                break
            if step_norm <= tol_step:
                status = _CONVERGED
                break
        if status == _CONVERGED or status == _NO_CONVERGENCE:
            grad_norm = 0.0
            for j in range(m):
                g = fabs(grad[j])
                if g > grad_norm:
                    grad_norm = g

    return gamma_arr, p_arr, ll, grad_norm, int(it), status


def weighted_residual_cross(const double[::1] delta, const double[::1] rs,
                            const double[::1] rt):
    """sum_i delta_i * rs_i * rt_i over a pair intersection."""
    cdef Py_ssize_t i, n = rs.shape[0]
    cdef double acc = 0.0
    with nogil:
        for i in range(n):
            acc += delta[i] * rs[i] * rt[i]
    return acc

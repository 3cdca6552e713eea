"""Self-contained numerical kernel: chi-squared tail probabilities and SPD solves.

Every matrix handled here is small (at most a few hundred rows), so dense
storage and unblocked algorithms are deliberate.
"""

import math

import numpy as np

from .errors import DomainError, NotPositiveDefinite

_PIVOT_RTOL = 1e-12
_MAX_ITER = 500
_EPS = 1e-15


def _lower_incomplete_series(a, x):
    """Regularized lower incomplete gamma P(a, x) by power series (x < a + 1)."""
    term = 1.0 / a
    total = term
    n = a
    for _ in range(_MAX_ITER):
        n += 1.0
        term *= x / n
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _upper_incomplete_cf(a, x):
    """Regularized upper incomplete gamma Q(a, x) by continued fraction (x >= a + 1).

    Modified Lentz evaluation of the standard continued fraction.
    """
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def chisq_sf(x, df):
    """Upper-tail probability P(chi2_df >= x).

    Equals the regularized upper incomplete gamma Q(df/2, x/2); absolute error
    below 1e-12 over the df/statistic ranges the tests produce.
    """
    if df < 1 or int(df) != df:
        raise DomainError(f"df must be a positive integer, got {df!r}")
    if not np.isfinite(x) or x < 0:
        raise DomainError(f"statistic must be finite and nonnegative, got {x!r}")
    if x == 0.0:
        return 1.0
    a = 0.5 * df
    half_x = 0.5 * x
    if half_x < a + 1.0:
        return min(1.0, max(0.0, 1.0 - _lower_incomplete_series(a, half_x)))
    return min(1.0, max(0.0, _upper_incomplete_cf(a, half_x)))


def format_pvalue(p):
    """4-significant-figure display form, with a floor for underflowed values."""
    if p < 1e-300:
        return "<1e-300"
    return f"{p:.4g}"


class SpdMatrix:
    """Dense symmetric matrix intended to be positive definite.

    Symmetry is enforced at construction; positive definiteness is only
    verified when a factorization is requested.
    """

    def __init__(self, data):
        a = np.asarray(data, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DomainError(f"expected a square matrix, got shape {a.shape}")
        self.data = 0.5 * (a + a.T)
        self.dim = a.shape[0]

    def cholesky(self):
        """Lower-triangular factor L with L L^T = A.

        Raises NotPositiveDefinite (with the failing pivot index) when a pivot
        falls below 1e-12 times the largest pivot seen so far.
        """
        a = self.data.copy()
        m = self.dim
        max_pivot = 0.0
        for j in range(m):
            s = a[j, j] - np.dot(a[j, :j], a[j, :j])
            max_pivot = max(max_pivot, abs(s))
            if s <= _PIVOT_RTOL * max_pivot or s <= 0.0:
                raise NotPositiveDefinite(j)
            ljj = math.sqrt(s)
            a[j, j] = ljj
            if j + 1 < m:
                a[j + 1:, j] = (a[j + 1:, j] - a[j + 1:, :j] @ a[j, :j]) / ljj
                a[j, j + 1:] = 0.0
        return a


def _as_spd(a):
    return a if isinstance(a, SpdMatrix) else SpdMatrix(a)


def spd_solve(a, b):
    """Solve A x = b for symmetric positive definite A via Cholesky."""
    spd = _as_spd(a)
    b = np.asarray(b, dtype=float)
    if b.shape[0] != spd.dim:
        raise DomainError(f"dimension mismatch: {spd.dim} vs {b.shape[0]}")
    chol = spd.cholesky()
    m = spd.dim
    y = np.empty_like(b, dtype=float)
    for i in range(m):
        y[i] = (b[i] - chol[i, :i] @ y[:i]) / chol[i, i]
    x = np.empty_like(y)
    for i in range(m - 1, -1, -1):
        x[i] = (y[i] - chol[i + 1:, i] @ x[i + 1:]) / chol[i, i]
    return x


def quad_form_inv(a, v):
    """v^T A^{-1} v for SPD A, computed through a solve, never an inverse."""
    v = np.asarray(v, dtype=float)
    return float(v @ spd_solve(a, v))


def spd_inverse_diagonal(a):
    """Diagonal of A^{-1} for SPD A; used for standard errors."""
    spd = _as_spd(a)
    eye = np.eye(spd.dim)
    return np.array([quad_form_inv(spd, eye[:, j]) for j in range(spd.dim)])

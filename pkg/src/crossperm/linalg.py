"""Small dense kernels for the James test.

Matrices are plain ``numpy`` arrays of shape (d, d); d is expected to stay
small, so nothing here is blocked or sparse.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular

from .errors import InvalidSample, SingularCovariance
from .statistics import MultivariateSample

# A Cholesky pivot at or below PIVOT_RTOL * max(diag(A)) means singular.
PIVOT_RTOL = 1e-12


def _data(m):
    return m.data if isinstance(m, MultivariateSample) else np.atleast_2d(np.asarray(m, float))


def col_means(m) -> np.ndarray:
    data = _data(m)
    if data.shape[0] < 1:
        raise InvalidSample("empty sample")
    return data.mean(axis=0)


def covariance(m) -> np.ndarray:
    """Unbiased sample covariance (divisor n - 1)."""
    data = _data(m)
    n = data.shape[0]
    if n < 2:
        raise InvalidSample("covariance needs at least 2 rows")
    dev = data - data.mean(axis=0)
    cov = dev.T @ dev / (n - 1)
    return 0.5 * (cov + cov.T)


def crossprod_covariance(data, mean) -> np.ndarray:
    """Unbiased covariance from the raw cross-product Y'Y - n m m'.

    Lets callers reuse a mean vector they already hold.
    """
    n = data.shape[0]
    cp = data.T @ data - n * np.outer(mean, mean)
    cp = 0.5 * (cp + cp.T)
    return cp / (n - 1)


def cholesky(A) -> np.ndarray:
    """Lower Cholesky factor with a scale-aware pivot check."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidSample("expected a square matrix")
    diag = np.diag(A)
    scale = diag.max() if diag.size else 0.0
    if not scale > 0.0:
        raise SingularCovariance("matrix has no positive diagonal entry")
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise SingularCovariance("matrix is not positive definite") from exc
    if np.any(np.diag(L) ** 2 <= PIVOT_RTOL * scale):
        raise SingularCovariance("matrix is numerically singular")
    return L


def spd_solve(A, b) -> np.ndarray:
    L = cholesky(A)
    z = solve_triangular(L, np.asarray(b, dtype=float), lower=True)
    return solve_triangular(L.T, z, lower=False)


def spd_inverse(A) -> np.ndarray:
    L = cholesky(A)
    Linv = solve_triangular(L, np.eye(L.shape[0]), lower=True)
    inv = Linv.T @ Linv
    return 0.5 * (inv + inv.T)


def batch_quadratic_forms(V, diff):
    """diff[k]' V[k]^-1 diff[k] for a stack of SPD matrices.

    Returns ``(values, ok)``; entries whose matrix fails the pivot check are
    NaN with ``ok`` False. Each entry is one factor-and-solve.
    """
    V = np.asarray(V, dtype=float)
    diff = np.asarray(diff, dtype=float)
    k = V.shape[0]
    ok = np.ones(k, dtype=bool)
    try:
        L = np.linalg.cholesky(V)
    except np.linalg.LinAlgError:
        L = np.zeros_like(V)
        for i in range(k):
            try:
                L[i] = np.linalg.cholesky(V[i])
            except np.linalg.LinAlgError:
                ok[i] = False
                L[i] = np.eye(V.shape[1])
    scale = np.einsum("kii->ki", V).max(axis=1)
    pivots = np.einsum("kii->ki", L) ** 2
    ok &= np.all(pivots > PIVOT_RTOL * scale[:, None], axis=1)
    L[~ok] = np.eye(V.shape[1])
    z = np.linalg.solve(L, diff[..., None])[..., 0]
    values = np.einsum("ki,ki->k", z, z)
    values[~ok] = np.nan
    return values, ok


def common_mean(y1, y2) -> np.ndarray:
    """Precision-weighted common mean of two samples.

    With A_k = cov(y_k) / n_k this is
    (A1^-1 + A2^-1)^-1 (A1^-1 ybar1 + A2^-1 ybar2).
    """
    d1, d2 = _data(y1), _data(y2)
    a1inv = spd_inverse(covariance(d1) / d1.shape[0])
    a2inv = spd_inverse(covariance(d2) / d2.shape[0])
    return spd_solve(a1inv + a2inv, a1inv @ col_means(d1) + a2inv @ col_means(d2))


def common_mean_center(y1, y2):
    """Translate both samples so their column means equal ``common_mean``."""
    d1, d2 = _data(y1), _data(y2)
    mc = common_mean(d1, d2)
    return d1 + (mc - col_means(d1)), d2 + (mc - col_means(d2))

"""Resampling p-value engines.

Three families are provided for each test:

* ``*_efficient`` draws ``B_side = round(sqrt(B))`` resamples per input and
  evaluates the statistic on all ``B_side**2`` cross combinations. Only the
  per-resample pieces (permuted columns, group summaries, mean vectors and
  covariances) are computed once per resample.
* ``*_naive`` / ``james_boot_ordinary`` are the plain loop baselines.
* ``boot_ttest2_neto`` represents bootstrap resamples as multinomial weight
  columns so resampled moments become matrix products.

All p-values use the ``(#exceedances + 1) / (m + 1)`` estimator with strict
inequality, so they lie in ``[1 / (m + 1), 1]``.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import (
    ConstantVector,
    DegenerateCorrelation,
    InvalidSample,
    SingularCovariance,
)
from .sampling import (
    RngState,
    as_rng,
    bootstrap_index_matrix,
    bootstrap_indices,
    shuffle,
    weight_matrix,
)
from .statistics import (
    R_DEGENERATE,
    MultivariateSample,
    PairedSample,
    TestResult,
    corr_asymptotic_pvalue,
    summarize,
    welch_asymptotic_pvalue,
    welch_t,
)

TWO_SIDED = "two-sided-abs"
GREATER = "one-sided-greater"

# Stand-in for the Fisher statistic of a resample with |r| ~ 1.
_MAX_FINITE = np.finfo(float).max
# Spawn-key component reserved for James retry draws.
_RETRY_STREAM = 0xFFFFFFFF
# Upper bound on doubles held per batch of James cells.
_JAMES_CHUNK_DOUBLES = 1 << 22


@dataclass(frozen=True)
class ResamplePlan:
    B_requested: int
    B_side: int
    B_effective: int

    @classmethod
    def from_requested(cls, B: int) -> "ResamplePlan":
        B = int(B)
        if B < 1:
            raise ValueError("B must be at least 1")
        # Round half up; sqrt(B) of an integer B is never exactly k + 0.5.
        side = max(1, int(math.floor(math.sqrt(B) + 0.5)))
        return cls(B, side, side * side)


def _plan(plan) -> ResamplePlan:
    return plan if isinstance(plan, ResamplePlan) else ResamplePlan.from_requested(plan)


@dataclass(frozen=True)
class NullStats:
    values: np.ndarray
    sidedness: str = TWO_SIDED

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).ravel()
        if vals.size == 0:
            raise ValueError("null distribution is empty")
        if self.sidedness not in (TWO_SIDED, GREATER):
            raise ValueError(f"unknown sidedness {self.sidedness!r}")
        object.__setattr__(self, "values", vals)


def pvalue_from_null(observed: float, null: NullStats) -> float:
    vals = null.values
    if null.sidedness == TWO_SIDED:
        exceed = np.count_nonzero(np.abs(vals) > abs(observed))
    else:
        exceed = np.count_nonzero(vals > observed)
    return (exceed + 1) / (vals.size + 1)


# ---------------------------------------------------------------------------
# Pearson correlation
# ---------------------------------------------------------------------------


def _corr_constants(s: PairedSample):
    """Centered vectors plus the permutation-invariant Eq-(1) pieces."""
    xc = s.x - s.x.mean()
    yc = s.y - s.y.mean()
    n = s.n
    m1, m12 = xc.sum(), xc @ xc
    m2, m22 = yc.sum(), yc @ yc
    up = m1 * m2 / n
    prod = (m12 - m1 * m1 / n) * (m22 - m2 * m2 / n)
    if not prod > 0.0:
        raise ConstantVector("correlation undefined: a vector has zero variance")
    return xc, yc, up, math.sqrt(prod)


def _log_ratio(r, counters):
    """log((1 + r) / (1 - r)), with near-perfect resamples pinned."""
    r = np.asarray(r, dtype=float)
    bad = np.abs(r) >= R_DEGENERATE
    nbad = int(np.count_nonzero(bad))
    if nbad:
        counters["degenerate_resamples"] += nbad
        safe = np.where(bad, 0.0, r)
        out = np.log((1.0 + safe) / (1.0 - safe))
        out[bad] = np.copysign(_MAX_FINITE, r[bad])
        return out
    return np.log((1.0 + r) / (1.0 - r))


def _observed_log_ratio(r):
    if abs(r) >= R_DEGENERATE:
        raise DegenerateCorrelation(f"|r| = {abs(r)!r} is too close to 1")
    return math.log((1.0 + r) / (1.0 - r))


_FLAGGED = ("degenerate_resamples", "retried_resamples", "skipped_resamples")


def _flags(counters):
    return tuple(k for k in _FLAGGED if counters.get(k))


def permcor_efficient(s: PairedSample, plan, rng: RngState, keep_trace=False) -> TestResult:
    """Cross-combination permutation test of zero correlation.

    Both x and y are shuffled ``B_side`` times; the ``B_side**2`` permuted
    cross sums come out of one matrix product. Returns r as the statistic.
    The null statistic omits the sqrt(n - 3) factor of the Fisher test,
    which is a monotone rescaling and does not change the p-value.
    """
    plan, rng = _plan(plan), as_rng(rng)
    xc, yc, up, down = _corr_constants(s)
    r = (xc @ yc - up) / down
    observed = _observed_log_ratio(r)

    n, k = s.n, plan.B_side
    counters = Counter()
    xperm = np.empty((k, n), dtype=np.intp)
    yperm = np.empty((k, n), dtype=np.intp)
    base = np.arange(n)
    for i in range(k):
        xperm[i] = shuffle(base, rng)
        yperm[i] = shuffle(base, rng)
    counters["shuffles"] = 2 * k

    cross = xc[xperm] @ yc[yperm].T  # S[i, j] = sum_k Xp[k, i] * Yp[k, j]
    tb = _log_ratio((cross - up) / down, counters)
    p = pvalue_from_null(observed, NullStats(tb, TWO_SIDED))
    trace = {"x_perms": xperm, "y_perms": yperm, "null": tb} if keep_trace else None
    return TestResult(float(r), p, "efficient", plan.B_effective, _flags(counters),
                      dict(counters), trace)


def permcor_naive(s: PairedSample, B, rng: RngState = None, keep_trace=False,
                  enumerate_all=False) -> TestResult:
    """Loop baseline: shuffle y alone B times and recompute the statistic.

    With ``enumerate_all`` every one of the n! orderings of y is visited
    (no RNG) and the exact permutation p-value
    ``#{|t_pi| >= |t_obs|} / n!`` is returned.
    """
    xc, yc, up, down = _corr_constants(s)
    r = (xc @ yc - up) / down
    observed = _observed_log_ratio(r)
    counters = Counter()

    if enumerate_all:
        if s.n > 9:
            raise InvalidSample("exhaustive enumeration is limited to n <= 9")
        perms = np.array(list(itertools.permutations(range(s.n))), dtype=np.intp)
        tb = _log_ratio((yc[perms] @ xc - up) / down, counters)
        # Ties within rounding count as at least as extreme.
        tol = 1e-10 * max(1.0, abs(observed))
        p = np.count_nonzero(np.abs(tb) >= abs(observed) - tol) / perms.shape[0]
        trace = {"null": tb} if keep_trace else None
        flags = ("enumerated",) + _flags(counters)
        return TestResult(float(r), float(p), "naive", perms.shape[0], flags,
                          dict(counters), trace)

    rng = as_rng(rng)
    B = int(B)
    if B < 1:
        raise ValueError("B must be at least 1")
    rb = np.empty(B)
    for b in range(B):
        rb[b] = (xc @ shuffle(yc, rng) - up) / down
    counters["shuffles"] = B
    tb = _log_ratio(rb, counters)
    p = pvalue_from_null(observed, NullStats(tb, TWO_SIDED))
    trace = {"null": tb} if keep_trace else None
    return TestResult(float(r), p, "naive", B, _flags(counters), dict(counters), trace)


# ---------------------------------------------------------------------------
# Welch two-sample test
# ---------------------------------------------------------------------------


def _welch_setup(x1, x2):
    """Observed statistic and the two groups shifted onto a common mean.

    The common mean is the inverse-variance weighted average
    g = (n1 m1 / s1^2 + n2 m2 / s2^2) / (n1 / s1^2 + n2 / s2^2), the
    one-dimensional form of the James centering; if a group is constant the
    pooled grand mean is used instead.
    """
    a, b = summarize(x1), summarize(x2)
    t_obs = welch_t(a, b)
    if a.var > 0.0 and b.var > 0.0:
        w1, w2 = a.n / a.var, b.n / b.var
        g = (w1 * a.mean + w2 * b.mean) / (w1 + w2)
    else:
        g = (a.n * a.mean + b.n * b.mean) / (a.n + b.n)
    c1 = np.asarray(x1, dtype=float) - a.mean + g
    c2 = np.asarray(x2, dtype=float) - b.mean + g
    return t_obs, c1, c2


def _welch_from_moments(m1, v1, n1, m2, v2, n2, counters):
    se2 = v1 / n1 + v2 / n2
    zero = se2 <= 0.0
    nzero = int(np.count_nonzero(zero))
    if nzero:
        # A resample with no spread contributes 0, i.e. counts for the null.
        counters["degenerate_resamples"] += nzero
        se2 = np.where(zero, 1.0, se2)
        return np.where(zero, 0.0, (m1 - m2) / np.sqrt(se2))
    return (m1 - m2) / np.sqrt(se2)


def boot_ttest2_efficient(x1, x2, plan, rng: RngState, keep_trace=False) -> TestResult:
    plan, rng = _plan(plan), as_rng(rng)
    t_obs, c1, c2 = _welch_setup(x1, x2)
    n1, n2, k = c1.size, c2.size, plan.B_side
    idx1 = bootstrap_index_matrix(n1, k, rng)
    idx2 = bootstrap_index_matrix(n2, k, rng)
    r1, r2 = c1[idx1], c2[idx2]
    bm1, bm2 = r1.mean(axis=1), r2.mean(axis=1)
    bv1 = ((r1 - bm1[:, None]) ** 2).sum(axis=1) / (n1 - 1)
    bv2 = ((r2 - bm2[:, None]) ** 2).sum(axis=1) / (n2 - 1)
    counters = Counter(summaries=2 * k)
    tb = _welch_from_moments(bm1[:, None], bv1[:, None], n1,
                             bm2[None, :], bv2[None, :], n2, counters)
    p = pvalue_from_null(t_obs, NullStats(tb, TWO_SIDED))
    trace = None
    if keep_trace:
        trace = {"centered": (c1, c2), "idx1": idx1, "idx2": idx2, "null": tb}
    return TestResult(float(t_obs), p, "efficient", plan.B_effective, _flags(counters),
                      dict(counters), trace)


def boot_ttest2_naive(x1, x2, B, rng: RngState, keep_trace=False) -> TestResult:
    rng = as_rng(rng)
    B = int(B)
    if B < 1:
        raise ValueError("B must be at least 1")
    t_obs, c1, c2 = _welch_setup(x1, x2)
    n1, n2 = c1.size, c2.size
    counters = Counter()
    tb = np.empty(B)
    for b in range(B):
        s1 = c1[bootstrap_indices(n1, rng)]
        s2 = c2[bootstrap_indices(n2, rng)]
        m1, m2 = s1.mean(), s2.mean()
        d1, d2 = s1 - m1, s2 - m2
        se2 = (d1 @ d1) / ((n1 - 1) * n1) + (d2 @ d2) / ((n2 - 1) * n2)
        if se2 > 0.0:
            tb[b] = (m1 - m2) / math.sqrt(se2)
        else:
            counters["degenerate_resamples"] += 1
            tb[b] = 0.0
    counters["summaries"] = 2 * B
    p = pvalue_from_null(t_obs, NullStats(tb, TWO_SIDED))
    trace = {"null": tb} if keep_trace else None
    return TestResult(float(t_obs), p, "naive", B, _flags(counters), dict(counters), trace)


def boot_ttest2_neto(x1, x2, B, rng: RngState, keep_trace=False) -> TestResult:
    """Weight-matrix bootstrap.

    For group k with weight matrix W (n_k x B), the resampled means are
    x'W and the raw second moments (x^2)'W; variances use the plug-in
    divisor, v = q - m^2. This differs from the unbiased variances of the
    other Welch engines by a factor (n - 1) / n.
    """
    rng = as_rng(rng)
    B = int(B)
    if B < 1:
        raise ValueError("B must be at least 1")
    t_obs, c1, c2 = _welch_setup(x1, x2)
    n1, n2 = c1.size, c2.size
    W1 = weight_matrix(n1, B, rng)
    W2 = weight_matrix(n2, B, rng)
    m1, m2 = c1 @ W1, c2 @ W2
    v1 = np.maximum((c1 * c1) @ W1 - m1 * m1, 0.0)
    v2 = np.maximum((c2 * c2) @ W2 - m2 * m2, 0.0)
    counters = Counter()
    tb = _welch_from_moments(m1, v1, n1, m2, v2, n2, counters)
    p = pvalue_from_null(t_obs, NullStats(tb, TWO_SIDED))
    trace = None
    if keep_trace:
        trace = {"centered": (c1, c2), "W1": W1, "W2": W2, "means": (m1, m2),
                 "vars": (v1, v2), "null": tb}
    return TestResult(float(t_obs), p, "neto", B, _flags(counters), dict(counters), trace)


# ---------------------------------------------------------------------------
# James multivariate test
# ---------------------------------------------------------------------------


def _james_setup(y1, y2):
    y1 = y1 if isinstance(y1, MultivariateSample) else MultivariateSample(y1)
    y2 = y2 if isinstance(y2, MultivariateSample) else MultivariateSample(y2)
    if y1.d != y2.d:
        raise InvalidSample(f"samples differ in dimension ({y1.d} vs {y2.d})")
    m1, m2 = linalg.col_means(y1), linalg.col_means(y2)
    V = linalg.covariance(y1) / y1.n + linalg.covariance(y2) / y2.n
    diff = m2 - m1
    observed = float(diff @ linalg.spd_solve(V, diff))
    x1, x2 = linalg.common_mean_center(y1, y2)
    return observed, x1, x2


def _james_resample_stat(x1, x2, rng, counters):
    n1, n2 = x1.shape[0], x2.shape[0]
    b1, b2 = bootstrap_indices(n1, rng), bootstrap_indices(n2, rng)
    xb1, xb2 = x1[b1], x2[b2]
    db = linalg.col_means(xb1) - linalg.col_means(xb2)
    Vb = linalg.covariance(xb1) / n1 + linalg.covariance(xb2) / n2
    counters["covariances"] += 2
    counters["solves"] += 1
    return float(db @ linalg.spd_solve(Vb, db)), b1, b2


def james_boot_ordinary(y1, y2, B, rng: RngState, keep_trace=False) -> TestResult:
    """One resample pair per iteration, B iterations.

    A resample whose covariance is singular is redrawn once from a reserved
    retry sub-stream; if that fails too it is dropped and m shrinks by one.
    """
    rng = as_rng(rng)
    B = int(B)
    if B < 1:
        raise ValueError("B must be at least 1")
    observed, x1, x2 = _james_setup(y1, y2)
    counters = Counter(covariances=0, solves=0)
    tb, drawn = [], []
    for b in range(B):
        try:
            out = _james_resample_stat(x1, x2, rng, counters)
        except SingularCovariance:
            counters["retried_resamples"] += 1
            retry = RngState(rng.seed, rng.stream + (_RETRY_STREAM, b))
            try:
                out = _james_resample_stat(x1, x2, retry, counters)
            except SingularCovariance:
                counters["skipped_resamples"] += 1
                continue
        tb.append(out[0])
        if keep_trace:
            drawn.append(out[1:])
    if not tb:
        raise SingularCovariance("every bootstrap resample was singular")
    tb = np.asarray(tb)
    p = pvalue_from_null(observed, NullStats(tb, GREATER))
    trace = {"centered": (x1, x2), "indices": drawn, "null": tb} if keep_trace else None
    return TestResult(observed, p, "ordinary-bootstrap", tb.size, _flags(counters),
                      dict(counters), trace)


def james_boot_efficient(y1, y2, plan, rng: RngState, keep_trace=False) -> TestResult:
    """Cross-combination bootstrap for the James statistic.

    ``B_side`` resamples per group, each contributing a mean vector and a
    covariance built from the raw cross product; the statistic is then
    evaluated for every (i, j) pair. Cells whose summed covariance is
    singular are dropped and reported.
    """
    plan, rng = _plan(plan), as_rng(rng)
    observed, x1, x2 = _james_setup(y1, y2)
    n1, n2, d = x1.shape[0], x2.shape[0], x1.shape[1]
    k = plan.B_side
    counters = Counter(covariances=0, solves=0)
    bm1, bm2 = np.empty((k, d)), np.empty((k, d))
    vb1, vb2 = np.empty((k, d, d)), np.empty((k, d, d))
    idx1 = np.empty((k, n1), dtype=np.intp)
    idx2 = np.empty((k, n2), dtype=np.intp)
    for i in range(k):
        idx1[i] = bootstrap_indices(n1, rng)
        idx2[i] = bootstrap_indices(n2, rng)
        yb1, yb2 = x1[idx1[i]], x2[idx2[i]]
        bm1[i], bm2[i] = yb1.mean(axis=0), yb2.mean(axis=0)
        vb1[i] = linalg.crossprod_covariance(yb1, bm1[i]) / n1
        vb2[i] = linalg.crossprod_covariance(yb2, bm2[i]) / n2
        counters["covariances"] += 2

    tb = np.empty((k, k))
    rows = max(1, _JAMES_CHUNK_DOUBLES // (k * d * d))
    for start in range(0, k, rows):
        stop = min(k, start + rows)
        V = (vb1[start:stop, None] + vb2[None, :]).reshape(-1, d, d)
        diff = (bm1[start:stop, None] - bm2[None, :]).reshape(-1, d)
        vals, _ = linalg.batch_quadratic_forms(V, diff)
        counters["solves"] += V.shape[0]
        tb[start:stop] = vals.reshape(stop - start, k)

    finite = np.isfinite(tb)
    skipped = int(tb.size - np.count_nonzero(finite))
    if skipped:
        counters["skipped_resamples"] += skipped
    if skipped == tb.size:
        raise SingularCovariance("every bootstrap combination was singular")
    p = pvalue_from_null(observed, NullStats(tb[finite], GREATER))
    trace = None
    if keep_trace:
        trace = {"centered": (x1, x2), "idx1": idx1, "idx2": idx2, "null": tb}
    return TestResult(observed, p, "efficient", plan.B_effective - skipped,
                      _flags(counters), dict(counters), trace)


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------

CORR_METHODS = ("asymptotic", "naive", "efficient")
WELCH_METHODS = ("asymptotic", "naive", "efficient", "neto")
JAMES_METHODS = ("ordinary", "efficient")


def corr_test(x, y, method="efficient", B=999, rng=None) -> TestResult:
    s = PairedSample(x, y)
    if method == "asymptotic":
        return corr_asymptotic_pvalue(s)
    if method == "naive":
        return permcor_naive(s, B, rng)
    if method == "efficient":
        return permcor_efficient(s, B, rng)
    raise ValueError(f"method {method!r} is not available for correlation")


def ttest2(x1, x2, method="efficient", B=999, rng=None) -> TestResult:
    if method == "asymptotic":
        return welch_asymptotic_pvalue(summarize(x1), summarize(x2))
    if method == "naive":
        return boot_ttest2_naive(x1, x2, B, rng)
    if method == "efficient":
        return boot_ttest2_efficient(x1, x2, B, rng)
    if method == "neto":
        return boot_ttest2_neto(x1, x2, B, rng)
    raise ValueError(f"method {method!r} is not available for the Welch test")


def james_test(y1, y2, method="efficient", B=999, rng=None) -> TestResult:
    if method in ("ordinary", "ordinary-bootstrap"):
        return james_boot_ordinary(y1, y2, B, rng)
    if method == "efficient":
        return james_boot_efficient(y1, y2, B, rng)
    raise ValueError(f"method {method!r} is not available for the James test")

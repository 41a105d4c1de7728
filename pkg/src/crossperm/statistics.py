"""Closed-form test statistics and their asymptotic p-values.

Covers the sample Pearson correlation with its Fisher-transform test, the
two-sample Welch t-test and the quadratic form of the James multivariate
test. Everything here is a pure function of its inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import special

from .errors import (
    ConstantVector,
    DegenerateCorrelation,
    DegenerateVariances,
    InvalidSample,
    TooFewObservations,
)

# |r| at or beyond this is treated as a perfect correlation.
R_DEGENERATE = 1.0 - 1e-12

METHODS = ("asymptotic", "naive", "efficient", "neto", "ordinary-bootstrap")


def _finite_vector(values, name):
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise InvalidSample(f"{name} must be one-dimensional")
    if not np.all(np.isfinite(arr)):
        raise InvalidSample(f"{name} contains non-finite values")
    return arr


@dataclass(frozen=True)
class PairedSample:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = _finite_vector(self.x, "x")
        y = _finite_vector(self.y, "y")
        if x.shape != y.shape:
            raise InvalidSample(f"x and y differ in length ({x.size} vs {y.size})")
        if x.size < 4:
            raise TooFewObservations("correlation tests need at least 4 pairs")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.size


@dataclass(frozen=True)
class GroupSummary:
    n: int
    mean: float
    var: float

    def __post_init__(self):
        if self.n < 2:
            raise TooFewObservations("a group needs at least 2 observations")
        if not (math.isfinite(self.mean) and math.isfinite(self.var)) or self.var < 0:
            raise InvalidSample("group summary must have finite mean and var >= 0")


@dataclass(frozen=True)
class MultivariateSample:
    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2 or arr.shape[1] < 1:
            raise InvalidSample("multivariate sample must be an n x d matrix")
        if not np.all(np.isfinite(arr)):
            raise InvalidSample("multivariate sample contains non-finite values")
        if arr.shape[0] < arr.shape[1] + 1:
            raise TooFewObservations(
                f"need n >= d + 1 rows, got n={arr.shape[0]}, d={arr.shape[1]}"
            )
        object.__setattr__(self, "data", arr)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]


@dataclass
class TestResult:
    """Outcome of one hypothesis test.

    ``flags`` carries non-fatal conditions (e.g. degenerate resamples) and
    ``counters`` the instrumented operation counts of the engine. ``trace``
    is only populated when an engine is asked to keep its resamples.
    """

    __test__ = False  # not a pytest class

    statistic: float
    pvalue: float
    method: str
    resamples_effective: int
    flags: tuple = ()
    counters: dict = field(default_factory=dict)
    trace: Optional[dict] = field(default=None, repr=False, compare=False)


def two_sided_t_pvalue(t, df):
    """2 * min(CDF, 1 - CDF) of Student's t, clamped to [0, 1]."""
    t = np.asarray(t, dtype=float)
    lower = special.stdtr(df, t)
    upper = special.stdtr(df, -t)
    p = np.clip(2.0 * np.minimum(lower, upper), 0.0, 1.0)
    return float(p) if p.ndim == 0 else p


def pearson_r(s: PairedSample) -> float:
    # Centered form of the raw-sum expression; identical algebraically and
    # far less prone to cancellation.
    xc = s.x - s.x.mean()
    yc = s.y - s.y.mean()
    sxx = xc @ xc
    syy = yc @ yc
    if sxx == 0.0 or syy == 0.0:
        raise ConstantVector("correlation undefined: a vector has zero variance")
    r = (xc @ yc) / math.sqrt(sxx * syy)
    return float(min(1.0, max(-1.0, r)))


def fisher_z(r: float, n: int) -> float:
    if n < 4:
        raise TooFewObservations("Fisher statistic needs n >= 4")
    if abs(r) >= R_DEGENERATE:
        raise DegenerateCorrelation(f"|r| = {abs(r)!r} is too close to 1")
    return 0.5 * math.log((1.0 + r) / (1.0 - r)) * math.sqrt(n - 3)


def corr_asymptotic_pvalue(s: PairedSample) -> TestResult:
    """Fisher-z test of zero correlation, referred to t with n - 3 df.

    The t reference is used at every n; it tends to the standard normal as
    n grows, so no switch-over threshold is needed.
    """
    r = pearson_r(s)
    z = fisher_z(r, s.n)
    return TestResult(z, two_sided_t_pvalue(z, s.n - 3), "asymptotic", 0)


def summarize(x) -> GroupSummary:
    arr = _finite_vector(x, "x")
    if arr.size < 2:
        raise TooFewObservations("a group needs at least 2 observations")
    mean = arr.mean()
    dev = arr - mean
    return GroupSummary(int(arr.size), float(mean), float(dev @ dev / (arr.size - 1)))


def _standard_error_sq(a: GroupSummary, b: GroupSummary) -> float:
    se2 = a.var / a.n + b.var / b.n
    if se2 <= 0.0:
        raise DegenerateVariances("both groups have zero variance")
    return se2


def welch_t(a: GroupSummary, b: GroupSummary) -> float:
    return (a.mean - b.mean) / math.sqrt(_standard_error_sq(a, b))


def welch_df(a: GroupSummary, b: GroupSummary) -> float:
    """Welch-Satterthwaite degrees of freedom.

    nu = (v1 + v2)^2 / (v1^2 / (n1 - 1) + v2^2 / (n2 - 1)),  v_k = s_k^2 / n_k
    """
    se2 = _standard_error_sq(a, b)
    v1 = a.var / a.n
    v2 = b.var / b.n
    return se2 * se2 / (v1 * v1 / (a.n - 1) + v2 * v2 / (b.n - 1))


def welch_asymptotic_pvalue(a: GroupSummary, b: GroupSummary) -> TestResult:
    t = welch_t(a, b)
    return TestResult(t, two_sided_t_pvalue(t, welch_df(a, b)), "asymptotic", 0)


def james_stat(m1, m2, V) -> float:
    """Quadratic form (m1 - m2)' V^-1 (m1 - m2) through a Cholesky solve."""
    from .linalg import spd_solve

    diff = np.atleast_1d(np.asarray(m1, dtype=float) - np.asarray(m2, dtype=float))
    V = np.atleast_2d(np.asarray(V, dtype=float))
    if V.shape != (diff.size, diff.size):
        raise InvalidSample("dimension mismatch between mean vectors and V")
    return float(diff @ spd_solve(V, diff))

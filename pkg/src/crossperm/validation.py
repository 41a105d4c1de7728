"""Null-hypothesis simulations: type I error and null quantiles."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats as sps

from . import engines
from .sampling import RngState, as_rng, fork
from .statistics import PairedSample, summarize, welch_df

TESTS = ("corr", "welch", "james")
DEFAULT_PROBS = (0.01, 0.025, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.975, 0.99)

_ENGINES = {
    ("corr", "efficient"): engines.permcor_efficient,
    ("corr", "naive"): engines.permcor_naive,
    ("welch", "efficient"): engines.boot_ttest2_efficient,
    ("welch", "naive"): engines.boot_ttest2_naive,
    ("welch", "neto"): engines.boot_ttest2_neto,
    ("james", "efficient"): engines.james_boot_efficient,
    ("james", "ordinary"): engines.james_boot_ordinary,
}


@dataclass
class NullSimConfig:
    test: str = "corr"
    method: str = "efficient"
    n: int = 30
    d: int = 1
    reps: int = 1000
    B: int = 999
    alpha: float = 0.05
    # Standard deviation of the second group (welch / james); the first is 1.
    scale2: float = 1.0
    probs: tuple = DEFAULT_PROBS
    threads: int = 1

    def __post_init__(self):
        if self.test not in TESTS:
            raise ValueError(f"unknown test {self.test!r}")
        if (self.test, self.method) not in _ENGINES:
            raise ValueError(f"method {self.method!r} is not available for {self.test}")
        if self.test != "james" and self.d != 1:
            raise ValueError("d must be 1 unless test is james")
        if self.reps < 1 or self.B < 1 or self.n < 4 or self.d < 1:
            raise ValueError("reps, B, d must be >= 1 and n >= 4")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        probs = tuple(float(p) for p in self.probs)
        if any(not 0.0 < p < 1.0 for p in probs) or any(
            b <= a for a, b in zip(probs, probs[1:])
        ):
            raise ValueError("probs must be strictly increasing in (0, 1)")
        self.probs = probs


@dataclass
class NullSimReport:
    test: str
    method: str
    reps: int
    alpha: float
    rejection_rate: float
    pvalue_ks_distance: float
    quantile_table: list = field(default_factory=list)
    pvalues: list = field(default_factory=list)

    def to_dict(self, include_pvalues=False):
        out = asdict(self)
        if not include_pvalues:
            out.pop("pvalues")
        out["quantile_table"] = [
            {"prob": p, "empirical": e, "reference": r} for p, e, r in self.quantile_table
        ]
        return out


def null_quantiles(stats: engines.NullStats, probs):
    """Empirical quantiles, inclusive linear interpolation.

    The quantile at probability p sits at 0-based position p * (m - 1) of
    the sorted values (numpy's ``"linear"`` method, R type 7).
    """
    probs = np.asarray(probs, dtype=float)
    if np.any((probs <= 0.0) | (probs >= 1.0)):
        raise ValueError("probabilities must lie in (0, 1)")
    q = np.quantile(stats.values, probs, method="linear")
    return list(zip(probs.tolist(), q.tolist()))


def reference_quantiles(test, n, probs, df=None):
    """Asymptotic reference quantiles for the null statistic.

    corr: t with n - 3 df (the Fisher statistic including sqrt(n - 3));
    welch: t with ``df`` (default 2(n - 1), the equal-variance value);
    normal: N(0, 1).
    """
    probs = np.asarray(probs, dtype=float)
    if test == "corr":
        return sps.t.ppf(probs, n - 3)
    if test == "welch":
        return sps.t.ppf(probs, 2 * (n - 1) if df is None else df)
    if test == "normal":
        return sps.norm.ppf(probs)
    raise ValueError(f"no reference distribution for {test!r}")


def ks_uniform_distance(pvalues) -> float:
    """Sup-distance between the empirical CDF of ``pvalues`` and U(0, 1)."""
    p = np.sort(np.asarray(pvalues, dtype=float))
    m = p.size
    i = np.arange(1, m + 1)
    return float(max(np.max(i / m - p), np.max(p - (i - 1) / m)))


def _draw(cfg: NullSimConfig, rng: RngState):
    g = rng.generator
    if cfg.test == "corr":
        return g.standard_normal(cfg.n), g.standard_normal(cfg.n)
    if cfg.test == "welch":
        return g.standard_normal(cfg.n), cfg.scale2 * g.standard_normal(cfg.n)
    return (g.standard_normal((cfg.n, cfg.d)),
            cfg.scale2 * g.standard_normal((cfg.n, cfg.d)))


def _one_replication(cfg: NullSimConfig, rng: RngState):
    data_rng, engine_rng = fork(rng, 2)
    a, b = _draw(cfg, data_rng)
    engine = _ENGINES[(cfg.test, cfg.method)]
    if cfg.test == "corr":
        res = engine(PairedSample(a, b), cfg.B, engine_rng, keep_trace=True)
        # Engines keep log((1+r)/(1-r)); rescale to the Fisher statistic.
        null = 0.5 * math.sqrt(cfg.n - 3) * res.trace["null"].ravel()
        ref = reference_quantiles("corr", cfg.n, cfg.probs)
    elif cfg.test == "welch":
        res = engine(a, b, cfg.B, engine_rng, keep_trace=True)
        null = res.trace["null"].ravel()
        ref = reference_quantiles("welch", cfg.n, cfg.probs,
                                  df=welch_df(summarize(a), summarize(b)))
    else:
        res = engine(a, b, cfg.B, engine_rng, keep_trace=True)
        null = res.trace["null"].ravel()
        null = null[np.isfinite(null)]
        ref = np.full(len(cfg.probs), np.nan)
    emp = np.quantile(null, cfg.probs, method="linear")
    return res.pvalue, emp, ref


def simulate_null(cfg: NullSimConfig, rng=None) -> NullSimReport:
    """Run ``cfg.reps`` independent null datasets through one engine.

    Replication i uses sub-stream i of ``rng``, so the report does not
    depend on ``cfg.threads``. The quantile table averages each dataset's
    null-statistic quantiles and reference quantiles over replications.
    """
    rng = as_rng(rng)
    streams = fork(rng, cfg.reps)
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            out = list(pool.map(lambda r: _one_replication(cfg, r), streams))
    else:
        out = [_one_replication(cfg, r) for r in streams]
    pvals = np.array([o[0] for o in out])
    emp = np.mean([o[1] for o in out], axis=0)
    ref = np.mean([o[2] for o in out], axis=0)
    table = [
        (p, float(e), None if math.isnan(r) else float(r))
        for p, e, r in zip(cfg.probs, emp, ref)
    ]
    return NullSimReport(
        test=cfg.test,
        method=cfg.method,
        reps=cfg.reps,
        alpha=cfg.alpha,
        rejection_rate=float(np.mean(pvals <= cfg.alpha)),
        pvalue_ks_distance=ks_uniform_distance(pvals),
        quantile_table=table,
        pvalues=pvals.tolist(),
    )


def write_quantile_tsv(report: NullSimReport, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("prob\tempirical\treference\n")
        for p, e, r in report.quantile_table:
            fh.write(f"{p!r}\t{e!r}\t{'NA' if r is None else repr(r)}\n")

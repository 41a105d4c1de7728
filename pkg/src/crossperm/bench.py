"""Timing harness for the engines.

Each cell of a grid (test, method, n, B) gets one untimed warm-up call and
is then timed ``reps`` times; every repetition draws a fresh dataset and
times exactly one engine call with ``time.perf_counter``. Data generation
and stream forking sit outside the measured region.
"""

from __future__ import annotations

import csv
import os
import statistics as pystats
import time
from dataclasses import astuple, dataclass, fields
from xml.sax.saxutils import escape


from . import engines
from .errors import MissingPair
from .sampling import RngState, as_rng, fork
from .statistics import PairedSample, corr_asymptotic_pvalue, summarize, welch_asymptotic_pvalue

FULL_CORR_N = tuple(range(10, 301, 10))
FULL_B = (999, 4999, 9999, 14999, 19999)
FULL_JAMES_N = tuple(range(10, 101, 10))
FULL_JAMES_B = (999, 4999)

DESK_N = (10, 50, 100)
DESK_B = (999, 9999)
DESK_JAMES_B = (999, 4999)
DESK_REPS = 10

CSV_HEADER = ("test", "method", "n", "d", "B", "reps", "median_seconds",
              "mean_seconds", "threads")


def _corr(method):
    if method == "asymptotic":
        return lambda a, b, B, rng: corr_asymptotic_pvalue(PairedSample(a, b))
    fn = {"naive": engines.permcor_naive, "efficient": engines.permcor_efficient}[method]
    return lambda a, b, B, rng: fn(PairedSample(a, b), B, rng)


def _welch(method):
    if method == "asymptotic":
        return lambda a, b, B, rng: welch_asymptotic_pvalue(summarize(a), summarize(b))
    return {"naive": engines.boot_ttest2_naive, "efficient": engines.boot_ttest2_efficient,
            "neto": engines.boot_ttest2_neto}[method]


def _james(method):
    return {"ordinary": engines.james_boot_ordinary,
            "efficient": engines.james_boot_efficient}[method]


_RUNNERS = {"corr": _corr, "welch": _welch, "james": _james}
METHODS = {
    "corr": ("asymptotic", "naive", "efficient"),
    "welch": ("asymptotic", "naive", "efficient", "neto"),
    "james": ("ordinary", "efficient"),
}


@dataclass(frozen=True)
class BenchConfig:
    test: str
    method: str
    n: int
    B: int
    d: int = 1

    def __post_init__(self):
        if self.test not in METHODS or self.method not in METHODS[self.test]:
            raise ValueError(f"unsupported benchmark cell {self.test}/{self.method}")


@dataclass(frozen=True)
class BenchRecord:
    test: str
    method: str
    n: int
    d: int
    B: int
    reps: int
    median_seconds: float
    mean_seconds: float
    threads: int = 1


@dataclass(frozen=True)
class SpeedupRecord:
    test: str
    n: int
    B: int
    baseline: str
    candidate: str
    factor: float


@dataclass
class GridSpec:
    test: str
    ns: tuple
    Bs: tuple
    methods: tuple
    d: int = 1

    def cells(self):
        for n in self.ns:
            for B in self.Bs:
                for m in self.methods:
                    yield BenchConfig(self.test, m, n, B, self.d)


def full_grids():
    """Full-scale grid: corr and welch over 30 n x 5 B, James 10 x 2."""
    return [
        GridSpec("corr", FULL_CORR_N, FULL_B, METHODS["corr"]),
        GridSpec("welch", FULL_CORR_N, FULL_B, METHODS["welch"]),
        GridSpec("james", FULL_JAMES_N, FULL_JAMES_B, METHODS["james"], d=3),
    ]


def desk_grids():
    return [
        GridSpec("corr", DESK_N, DESK_B, METHODS["corr"]),
        GridSpec("welch", DESK_N, DESK_B, METHODS["welch"]),
        GridSpec("james", DESK_N, DESK_JAMES_B, METHODS["james"], d=3),
    ]


def make_data(cfg: BenchConfig, rng: RngState):
    g = rng.generator
    if cfg.test == "james":
        return g.standard_normal((cfg.n, cfg.d)), g.standard_normal((cfg.n, cfg.d))
    return g.standard_normal(cfg.n), g.standard_normal(cfg.n)


def time_engine(cfg: BenchConfig, reps: int, rng=None, threads: int = 1) -> BenchRecord:
    if reps < 1:
        raise ValueError("reps must be >= 1")
    rng = as_rng(rng)
    run = _RUNNERS[cfg.test](cfg.method)
    warm, *streams = fork(rng, reps + 1)
    warm_data, warm_engine = fork(warm, 2)
    run(*make_data(cfg, warm_data), cfg.B, warm_engine)
    times = []
    for stream in streams:
        data_rng, engine_rng = fork(stream, 2)
        a, b = make_data(cfg, data_rng)
        t0 = time.perf_counter()
        run(a, b, cfg.B, engine_rng)
        times.append(time.perf_counter() - t0)
    return BenchRecord(cfg.test, cfg.method, cfg.n, cfg.d, cfg.B, reps,
                       pystats.median(times), pystats.fmean(times), threads)


def run_grid(grids, reps: int, rng=None, threads: int = 1, progress=None) -> list:
    """Time every cell; cell i of the flattened grid uses sub-stream i."""
    if isinstance(grids, GridSpec):
        grids = [grids]
    cells = [c for g in grids for c in g.cells()]
    streams = fork(as_rng(rng), len(cells))
    records = []
    for cfg, stream in zip(cells, streams):
        records.append(time_engine(cfg, reps, stream, threads))
        if progress is not None:
            progress(records[-1])
    return records


def speedups(records, baseline: str, candidate: str, test=None) -> list:
    """baseline median / candidate median for every matching (test, n, B)."""
    index = {}
    for r in records:
        index[(r.test, r.n, r.B, r.method)] = r
    out = []
    cells = sorted({(r.test, r.n, r.B) for r in records if test is None or r.test == test})
    for t, n, B in cells:
        base = index.get((t, n, B, baseline))
        cand = index.get((t, n, B, candidate))
        if base is None and cand is None:
            continue
        if base is None or cand is None:
            raise MissingPair(f"no {baseline}/{candidate} pair for {t} n={n} B={B}")
        out.append(SpeedupRecord(t, n, B, baseline, candidate,
                                 base.median_seconds / cand.median_seconds))
    return out


def write_csv(records, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for r in records:
            w.writerow([repr(v) if isinstance(v, float) else v for v in astuple(r)])


def read_csv(path) -> list:
    types = [f.type for f in fields(BenchRecord)]
    casts = {"str": str, "int": int, "float": float}
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_HEADER:
            raise ValueError(f"unexpected header {header}")
        for row in reader:
            out.append(BenchRecord(*(casts[t](v) for t, v in zip(types, row))))
    return out


def speedup_svg(speedup_records, title="", width=640, height=400) -> str:
    """Line chart of speed-up factor against n, one polyline per B."""
    pad_l, pad_r, pad_t, pad_b = 60, 110, 40, 50
    by_B = {}
    for s in speedup_records:
        by_B.setdefault(s.B, []).append((s.n, s.factor))
    ns = [s.n for s in speedup_records] or [0, 1]
    fs = [s.factor for s in speedup_records] or [0, 1]
    x0, x1 = min(ns), max(ns)
    y0, y1 = 0.0, max(max(fs), 1.0) * 1.05
    x1 = x1 if x1 > x0 else x0 + 1

    def px(n):
        return pad_l + (n - x0) / (x1 - x0) * (width - pad_l - pad_r)

    def py(f):
        return height - pad_b - (f - y0) / (y1 - y0) * (height - pad_t - pad_b)

    palette = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="14">'
        f"{escape(title)}</text>",
        f'<line x1="{pad_l}" y1="{height - pad_b}" x2="{width - pad_r}" '
        f'y2="{height - pad_b}" stroke="black"/>',
        f'<line x1="{pad_l}" y1="{pad_t}" x2="{pad_l}" y2="{height - pad_b}" stroke="black"/>',
        f'<text x="{(pad_l + width - pad_r) / 2:.1f}" y="{height - 12}" '
        f'text-anchor="middle" font-size="12">n</text>',
        f'<text x="14" y="{height / 2:.1f}" font-size="12" '
        f'transform="rotate(-90 14 {height / 2:.1f})">speed-up factor</text>',
        f'<line x1="{pad_l}" y1="{py(1.0):.2f}" x2="{width - pad_r}" y2="{py(1.0):.2f}" '
        f'stroke="grey" stroke-dasharray="4 3"/>',
    ]
    for k, (B, pts) in enumerate(sorted(by_B.items())):
        pts.sort()
        colour = palette[k % len(palette)]
        coords = " ".join(f"{px(n):.2f},{py(f):.2f}" for n, f in pts)
        parts.append(f'<polyline data-B="{B}" fill="none" stroke="{colour}" '
                     f'stroke-width="2" points="{coords}"/>')
        parts.append(f'<text x="{width - pad_r + 8}" y="{pad_t + 16 * (k + 1)}" '
                     f'font-size="12" fill="{colour}">B={B}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# (baseline, candidate) pairs plotted for each test.
PLOT_PAIRS = {
    "corr": [("naive", "efficient"), ("efficient", "asymptotic")],
    "welch": [("naive", "efficient"), ("neto", "efficient"), ("efficient", "asymptotic")],
    "james": [("ordinary", "efficient")],
}


def emit(records, outdir) -> list:
    """Write bench.csv plus one speed-up SVG per (test, baseline, candidate)."""
    os.makedirs(outdir, exist_ok=True)
    written = [os.path.join(outdir, "bench.csv")]
    write_csv(records, written[0])
    tests = sorted({r.test for r in records})
    for test in tests:
        methods = {r.method for r in records if r.test == test}
        for base, cand in PLOT_PAIRS.get(test, []):
            if base not in methods or cand not in methods:
                continue
            sp = speedups(records, base, cand, test=test)
            path = os.path.join(outdir, f"speedup_{test}_{base}_vs_{cand}.svg")
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(speedup_svg(sp, title=f"{test}: {base} / {cand}"))
            written.append(path)
    return written

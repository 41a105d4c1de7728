"""Command-line entry point: ``crossperm <subcommand> ...``.

Exit codes: 0 ok, 1 usage, 2 data error, 3 degenerate statistic,
4 internal error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import bench, engines, io, validation
from .errors import CrossPermError, DegenerateError
from .sampling import DEFAULT_SEED, RngState
from .statistics import PairedSample, pearson_r

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_DEGENERATE, EXIT_INTERNAL = 0, 1, 2, 3, 4
SCHEMA = "1"

SUBCOMMAND_METHODS = {
    "corr": engines.CORR_METHODS,
    "ttest2": engines.WELCH_METHODS,
    "james": engines.JAMES_METHODS,
    "batch": io.BATCH_METHODS,
}
VALIDATE_METHODS = {
    "corr": ("efficient", "naive"),
    "welch": ("efficient", "naive", "neto"),
    "james": ("efficient", "ordinary"),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _seed(text):
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _common(p, method_default="efficient", with_method=True):
    if with_method:
        p.add_argument("--method", default=method_default,
                       help="resampling method (default: %(default)s)")
    p.add_argument("-B", "--B", dest="B", type=int, default=999,
                   help="requested number of resamples (default: %(default)s)")
    p.add_argument("--seed", type=_seed, default=DEFAULT_SEED,
                   help="64-bit RNG seed (default: %(default)s)")
    p.add_argument("--alpha", type=float, default=0.05,
                   help="significance level (default: %(default)s)")
    p.add_argument("--threads", type=int, default=1,
                   help="worker threads; results do not depend on it (default: %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="crossperm", description=(
        "Permutation and bootstrap p-values via square-root cross combinations."))
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("corr", help="test of zero Pearson correlation")
    p.add_argument("inputs", nargs="+", metavar="FILE",
                   help="one two-column file, or two single-column files (x, y)")
    _common(p)
    p.add_argument("--json", action="store_true", help="print a JSON document")

    p = sub.add_parser("ttest2", help="two-sample Welch test")
    p.add_argument("inputs", nargs="+", metavar="FILE",
                   help="two single-column files, or one file plus --labels")
    p.add_argument("--labels", help="label file (one per line) or inline comma list")
    _common(p)
    p.add_argument("--json", action="store_true", help="print a JSON document")

    p = sub.add_parser("james", help="two-sample James multivariate test")
    p.add_argument("inputs", nargs="+", metavar="FILE", help="two matrix files")
    _common(p)
    p.add_argument("--json", action="store_true", help="print a JSON document")

    p = sub.add_parser("batch", help="Welch test on every column of a matrix")
    p.add_argument("matrix", nargs="?", help="CSV/TSV matrix, rows = observations")
    p.add_argument("--labels", help="label file (one per line) or inline comma list")
    p.add_argument("--synthetic", metavar="ROWSxCOLS",
                   help="generate a null matrix instead of reading one, e.g. 40x5000")
    p.add_argument("--rownames", action="store_true", help="first column holds row names")
    p.add_argument("--output", default="crossperm-out", help="output directory (default: %(default)s)")
    _common(p)

    p = sub.add_parser("validate", help="null simulation for one engine")
    p.add_argument("test", choices=validation.TESTS)
    p.add_argument("--n", type=int, default=30, help="observations per group (default: %(default)s)")
    p.add_argument("--d", type=int, default=None, help="dimension, james only (default: 3)")
    p.add_argument("--reps", type=int, default=1000, help="null replications (default: %(default)s)")
    p.add_argument("--scale2", type=float, default=1.0,
                   help="standard deviation of group 2 (default: %(default)s)")
    p.add_argument("--output", default="crossperm-out", help="output directory (default: %(default)s)")
    _common(p)

    p = sub.add_parser("bench", help="timing grid and speed-up plots")
    grid = p.add_mutually_exclusive_group()
    grid.add_argument("--desk", action="store_true",
                      help="small grid, n in {10,50,100} (the default)")
    grid.add_argument("--full", action="store_true", help="full grid, n up to 300 and B up to 19999 (slow)")
    p.add_argument("--tests", default="corr,welch,james",
                   help="comma list of tests to time (default: %(default)s)")
    p.add_argument("--reps", type=int, default=bench.DESK_REPS,
                   help="timed repetitions per cell (default: %(default)s)")
    p.add_argument("--output", default="crossperm-out", help="output directory (default: %(default)s)")
    p.add_argument("--seed", type=_seed, default=DEFAULT_SEED,
                   help="64-bit RNG seed (default: %(default)s)")
    p.add_argument("--threads", type=int, default=1,
                   help="recorded in every row; timing runs single-threaded (default: %(default)s)")
    return parser


def _check(args):
    """Reject bad flag combinations before any file is opened."""
    cmd = args.command
    if getattr(args, "B", 1) < 1:
        raise UsageError("--B must be at least 1")
    if hasattr(args, "alpha") and not 0.0 < args.alpha < 1.0:
        raise UsageError("--alpha must lie in (0, 1)")
    if getattr(args, "threads", 1) < 1:
        raise UsageError("--threads must be at least 1")
    if cmd in SUBCOMMAND_METHODS and args.method not in SUBCOMMAND_METHODS[cmd]:
        raise UsageError(f"--method {args.method} is not valid for {cmd}; "
                         f"choose from {', '.join(SUBCOMMAND_METHODS[cmd])}")
    if cmd == "corr" and len(args.inputs) > 2:
        raise UsageError("corr takes one or two input files")
    if cmd == "ttest2":
        if len(args.inputs) == 1 and not args.labels:
            raise UsageError("a single ttest2 input needs --labels")
        if len(args.inputs) == 2 and args.labels:
            raise UsageError("--labels cannot be combined with two input files")
        if len(args.inputs) > 2:
            raise UsageError("ttest2 takes one or two input files")
    if cmd == "james" and len(args.inputs) != 2:
        raise UsageError("james takes exactly two input files")
    if cmd == "batch":
        if bool(args.matrix) == bool(args.synthetic):
            raise UsageError("give either a matrix file or --synthetic")
        if args.matrix and not args.labels:
            raise UsageError("a matrix file needs --labels")
        if args.synthetic:
            args.synthetic_shape = _shape(args.synthetic)
    if cmd == "validate":
        if args.method not in VALIDATE_METHODS[args.test]:
            raise UsageError(f"--method {args.method} is not valid for validate {args.test}")
        if args.d is None:
            args.d = 3 if args.test == "james" else 1
        if args.test != "james" and args.d != 1:
            raise UsageError("--d applies to james only")
        if args.reps < 1 or args.n < 4:
            raise UsageError("--reps must be >= 1 and --n >= 4")
    if cmd == "bench":
        tests = [t.strip() for t in args.tests.split(",") if t.strip()]
        bad = [t for t in tests if t not in bench.METHODS]
        if bad or not tests:
            raise UsageError(f"unknown bench tests: {bad or args.tests!r}")
        if args.reps < 1:
            raise UsageError("--reps must be >= 1")
        args.test_list = tests


def _shape(text):
    try:
        rows, cols = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise UsageError(f"--synthetic expects ROWSxCOLS, got {text!r}") from None
    if rows < 4 or cols < 1:
        raise UsageError("--synthetic needs at least 4 rows and 1 column")
    return rows, cols


def _labels(spec):
    if os.path.exists(spec):
        return io.GroupLabels.read(spec)
    return io.GroupLabels.parse(spec)


def _column(path, which=0):
    m = io.load_matrix(path)
    if m.missing.any():
        raise CrossPermError(f"{path}: missing values are not supported")
    return m.values[:, which]


def _report(args, test, res, extra=None):
    doc = {
        "schema": SCHEMA,
        "test": test,
        "method": res.method,
        "statistic": res.statistic,
        "pvalue": res.pvalue,
        "resamples_effective": res.resamples_effective,
        "B_requested": args.B,
        "seed": args.seed,
        "alpha": args.alpha,
        "reject": bool(res.pvalue <= args.alpha),
        "flags": list(res.flags),
        "counters": dict(sorted(res.counters.items())),
    }
    doc.update(extra or {})
    if args.json:
        print(json.dumps(doc, sort_keys=True))
    else:
        bits = [f"{k}={doc[k]!r}" if isinstance(doc[k], float) else f"{k}={doc[k]}"
                for k in ("test", "method", "statistic", "pvalue", "resamples_effective")]
        if extra:
            bits += [f"{k}={v!r}" for k, v in extra.items()]
        if res.flags:
            bits.append("flags=" + ",".join(res.flags))
        print(" ".join(bits))


def cmd_corr(args):
    if len(args.inputs) == 1:
        m = io.load_matrix(args.inputs[0])
        if m.values.shape[1] != 2:
            raise CrossPermError("a single corr input must have exactly two columns")
        if m.missing.any():
            raise CrossPermError("missing values are not supported")
        x, y = m.values[:, 0], m.values[:, 1]
    else:
        x, y = _column(args.inputs[0]), _column(args.inputs[1])
    r = pearson_r(PairedSample(x, y))
    res = engines.corr_test(x, y, args.method, args.B, RngState(args.seed))
    _report(args, "corr", res, {"correlation": r})
    return EXIT_OK


def cmd_ttest2(args):
    if len(args.inputs) == 2:
        a, b = _column(args.inputs[0]), _column(args.inputs[1])
    else:
        values = _column(args.inputs[0])
        labels = _labels(args.labels)
        if labels.labels.size != values.size:
            raise CrossPermError(f"{labels.labels.size} labels for {values.size} values")
        a, b = values[labels.labels == 0], values[labels.labels == 1]
    res = engines.ttest2(a, b, args.method, args.B, RngState(args.seed))
    _report(args, "ttest2", res)
    return EXIT_OK


def cmd_james(args):
    mats = []
    for path in args.inputs:
        m = io.load_matrix(path)
        if m.missing.any():
            raise CrossPermError(f"{path}: missing values are not supported")
        mats.append(m.values)
    res = engines.james_test(mats[0], mats[1], args.method, args.B, RngState(args.seed))
    _report(args, "james", res)
    return EXIT_OK


def cmd_batch(args):
    rng = RngState(args.seed)
    if args.synthetic:
        data_rng, run_rng = RngState(args.seed, (0,)), RngState(args.seed, (1,))
        rows, cols = args.synthetic_shape
        m, labels = io.synthetic_matrix(rows, cols, data_rng)
        rng = run_rng
    else:
        m = io.load_matrix(args.matrix, rownames=args.rownames)
        labels = _labels(args.labels)
    results = io.batch_welch(m, labels, args.method, args.B, rng, threads=args.threads)
    os.makedirs(args.output, exist_ok=True)
    path = os.path.join(args.output, "batch_results.tsv")
    names = m.column_names or [f"col{j + 1}" for j in range(m.values.shape[1])]
    io.write_results(results, path, names)
    pvals = np.array([r.pvalue for r in results], dtype=float)
    tested = np.isfinite(pvals)
    frac = float(np.mean(pvals[tested] <= args.alpha)) if tested.any() else float("nan")
    print(f"columns={len(results)} tested={int(tested.sum())} "
          f"rejected_fraction={frac!r} alpha={args.alpha!r} output={path}")
    return EXIT_OK


def cmd_validate(args):
    cfg = validation.NullSimConfig(
        test=args.test, method=args.method, n=args.n, d=args.d, reps=args.reps, B=args.B,
        alpha=args.alpha, scale2=args.scale2, threads=args.threads)
    report = validation.simulate_null(cfg, RngState(args.seed))
    os.makedirs(args.output, exist_ok=True)
    doc = {"schema": SCHEMA, "seed": args.seed, "n": args.n, "d": args.d, "B": args.B,
           "scale2": args.scale2, **report.to_dict()}
    jpath = os.path.join(args.output, f"validate_{args.test}_{args.method}.json")
    tpath = os.path.join(args.output, f"validate_{args.test}_{args.method}_quantiles.tsv")
    with open(jpath, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")
    validation.write_quantile_tsv(report, tpath)
    print(f"test={report.test} method={report.method} reps={report.reps} "
          f"rejection_rate={report.rejection_rate!r} "
          f"ks_distance={report.pvalue_ks_distance!r} output={jpath}")
    return EXIT_OK


def cmd_bench(args):
    grids = bench.full_grids() if args.full else bench.desk_grids()
    grids = [g for g in grids if g.test in args.test_list]
    records = bench.run_grid(grids, args.reps, RngState(args.seed), threads=args.threads)
    written = bench.emit(records, args.output)
    # Timings vary run to run; stdout only lists what was produced.
    print(f"records={len(records)} preset={'full' if args.full else 'desk'}")
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


COMMANDS = {
    "corr": cmd_corr,
    "ttest2": cmd_ttest2,
    "james": cmd_james,
    "batch": cmd_batch,
    "validate": cmd_validate,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _check(args)
    except UsageError as exc:
        print(f"crossperm {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except DegenerateError as exc:
        print(f"crossperm {args.command}: degenerate statistic: "
              f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (CrossPermError, OSError, ValueError) as exc:
        print(f"crossperm {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        print(f"crossperm {args.command}: internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())

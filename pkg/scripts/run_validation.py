"""Null calibration for every engine: rejection rate, KS distance, quantiles.

    python scripts/run_validation.py --reps 1000 --out results/validation
"""

import argparse
import json
import os
import time

from crossperm.sampling import RngState
from crossperm.validation import NullSimConfig, simulate_null, write_quantile_tsv

RUNS = [
    ("corr", "efficient", 1, 1.0),
    ("corr", "naive", 1, 1.0),
    ("welch", "efficient", 1, 1.0),
    ("welch", "efficient", 1, 3.0),
    ("welch", "naive", 1, 3.0),
    ("welch", "neto", 1, 3.0),
    ("james", "efficient", 3, 1.0),
    ("james", "ordinary", 3, 1.0),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=30)
    ap.add_argument("--B", type=int, default=999)
    ap.add_argument("--reps", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--skip-slow", action="store_true", help="drop naive and ordinary engines")
    ap.add_argument("--out", default="results/validation")
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)

    summary = []
    for test, method, d, scale2 in RUNS:
        if args.skip_slow and method in ("naive", "ordinary"):
            continue
        cfg = NullSimConfig(test=test, method=method, n=args.n, d=d, reps=args.reps,
                            B=args.B, scale2=scale2, threads=args.threads)
        t0 = time.perf_counter()
        rep = simulate_null(cfg, RngState(args.seed))
        secs = time.perf_counter() - t0
        tag = f"{test}_{method}_s{scale2:g}"
        write_quantile_tsv(rep, os.path.join(args.out, f"{tag}_quantiles.tsv"))
        row = {"test": test, "method": method, "scale2": scale2,
               "rejection_rate": rep.rejection_rate, "ks": rep.pvalue_ks_distance,
               "seconds": round(secs, 2)}
        summary.append(row)
        print(f"{tag:28s} rate={rep.rejection_rate:.3f} ks={rep.pvalue_ks_distance:.3f} "
              f"({secs:.1f}s)")
    with open(os.path.join(args.out, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2)


if __name__ == "__main__":
    main()

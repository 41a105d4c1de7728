"""Timing grids and speed-up plots.

    python scripts/run_bench.py                # desk grid, a few minutes
    python scripts/run_bench.py --full         # full grid, hours with naive engines
"""

import argparse

from crossperm import bench
from crossperm.sampling import RngState


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--full", action="store_true")
    ap.add_argument("--tests", default="corr,welch,james")
    ap.add_argument("--reps", type=int, default=bench.DESK_REPS)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--out", default="results/bench")
    args = ap.parse_args()

    wanted = set(args.tests.split(","))
    grids = [g for g in (bench.full_grids() if args.full else bench.desk_grids())
             if g.test in wanted]

    def progress(r):
        print(f"{r.test:6s} {r.method:10s} n={r.n:<4d} d={r.d} B={r.B:<6d} "
              f"median={r.median_seconds * 1e3:9.2f} ms", flush=True)

    records = bench.run_grid(grids, args.reps, RngState(args.seed), progress=progress)
    for path in bench.emit(records, args.out):
        print("wrote", path)
    for test, pairs in bench.PLOT_PAIRS.items():
        for base, cand in pairs:
            try:
                sp = bench.speedups(records, base, cand, test=test)
            except bench.MissingPair:
                continue
            if sp:
                best = max(sp, key=lambda s: s.factor)
                print(f"{test}: {base} vs {cand} up to {best.factor:.1f}x "
                      f"(n={best.n}, B={best.B})")


if __name__ == "__main__":
    main()

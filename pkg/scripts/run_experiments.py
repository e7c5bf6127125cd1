#!/usr/bin/env python3
"""Regenerate the CSVs for every built-in figure sweep.

    python3 scripts/run_experiments.py --out results --trials 1000000
"""
import argparse
import time

from fdrelay.experiments import EXPERIMENTS, run_experiment


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="results")
    ap.add_argument("--trials", type=int, default=1_000_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--only", nargs="*", choices=EXPERIMENTS, default=list(EXPERIMENTS))
    args = ap.parse_args()
    for name in args.only:
        t0 = time.perf_counter()
        paths, unstable = run_experiment(name, args.out, trials=args.trials, seed=args.seed,
                                         workers=args.workers)
        flag = " (numerical instability in some rows)" if unstable else ""
        print(f"{name}: {len(paths)} files in {time.perf_counter() - t0:.1f}s{flag}")


if __name__ == "__main__":
    main()

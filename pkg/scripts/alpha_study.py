#!/usr/bin/env python3
"""Surrogate alpha versus the grid-optimal alpha on the baseline scenario."""
import argparse

from fdrelay import NetworkParams, PowerControlMode, SelectionScheme
from fdrelay.optimizer import optimal_alpha_grid, suboptimal_alpha


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--relays", type=int, default=4)
    ap.add_argument("--subcarriers", type=int, default=4)
    ap.add_argument("--grid-points", type=int, default=101)
    args = ap.parse_args()
    p = NetworkParams.baseline(n_relays=args.relays, n_subcarriers=args.subcarriers)
    print("mode     scheme  alpha_sub  alpha_opt  outage_sub     outage_opt     gap")
    for mode in PowerControlMode:
        for scheme in (SelectionScheme.BULK, SelectionScheme.PER_SUBCARRIER):
            sub = suboptimal_alpha(p, mode, scheme)
            opt = optimal_alpha_grid(p, mode, scheme, grid_points=args.grid_points)
            a, b = sub.achieved_outage.probability, opt.achieved_outage.probability
            print(f"{mode.value:8s} {scheme.value:6s}  {sub.alpha:.4f}     {opt.alpha:.4f}     "
                  f"{a:.4e}     {b:.4e}     {a / b - 1:+.1%}")


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Compare every analytic routine with Monte Carlo on random scenarios.

Prints one line per scenario with the worst |analytic - MC| measured in
Wilson half-widths.
"""
import argparse
import itertools

import numpy as np

from fdrelay import (DuplexMode, NetworkParams, PowerControlMode, SelectionScheme,
                     analytic_outage, db_to_linear, estimate_outages)

MEANS = ("mu_sr", "mu_rd", "mu_sb", "mu_rb", "mu_cr", "mu_cd", "mu_cb", "phi_bar")


def random_params(rng, spread_db=10.0):
    base = NetworkParams.baseline()
    means = {k: getattr(base, k) * float(db_to_linear(rng.uniform(-spread_db, spread_db)))
             for k in MEANS}
    return base.replace(**means, n_relays=int(rng.integers(1, 5)),
                        n_subcarriers=int(rng.integers(1, 5)))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--scenarios", type=int, default=5)
    ap.add_argument("--trials", type=int, default=1_000_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    configs = list(itertools.product(
        PowerControlMode, (DuplexMode.FULL, DuplexMode.HALF),
        (SelectionScheme.BULK, SelectionScheme.PER_SUBCARRIER)))
    for i in range(args.scenarios):
        p = random_params(rng)
        mc = estimate_outages(p, configs, args.trials, seed=args.seed + i)
        worst = max(abs(analytic_outage(p, *c) - mc[c].probability) / max(mc[c].half_width, 1e-300)
                    for c in configs)
        print(f"scenario {i}: N={p.n_relays} K={p.n_subcarriers} worst deviation "
              f"{worst:.2f} half-widths")


if __name__ == "__main__":
    main()

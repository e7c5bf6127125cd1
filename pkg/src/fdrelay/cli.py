"""Command line entry point: ``fdrelay run | experiment | optimize``."""

from __future__ import annotations

import argparse
import json
import sys

from .analytic import NumericalInstabilityError
from .experiments import (EXPERIMENTS, ConfigError, load_config, run_experiment, run_sweep)
from .link import PowerControlMode, SelectionScheme, parse_enum
from .optimizer import optimal_alpha_grid, suboptimal_alpha

EXIT_OK, EXIT_CONFIG, EXIT_UNSTABLE = 0, 2, 3


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fdrelay", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the sweep described by a scenario file")
    run.add_argument("--config", required=True)
    run.add_argument("--out", required=True, help="CSV path")
    run.add_argument("--seed", type=int)
    run.add_argument("--trials", type=int)
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--no-timing", action="store_true",
                     help="write wall_ms as 0 so reruns are byte-identical")

    exp = sub.add_parser("experiment", help="run a built-in figure sweep")
    exp.add_argument("name", choices=EXPERIMENTS)
    exp.add_argument("--out", required=True, help="output directory")
    exp.add_argument("--seed", type=int, default=0)
    exp.add_argument("--trials", type=int, default=1_000_000)
    exp.add_argument("--workers", type=int, default=1)
    exp.add_argument("--no-timing", action="store_true")

    opt = sub.add_parser("optimize", help="surrogate and grid-optimal alpha")
    opt.add_argument("--config", required=True)
    opt.add_argument("--mode", required=True, choices=[m.value for m in PowerControlMode])
    opt.add_argument("--scheme", default="ps", choices=[s.value for s in SelectionScheme][:2])
    opt.add_argument("--grid-points", type=int, default=0,
                     help="also run the grid oracle with this many points")
    return ap


def _run(args) -> int:
    spec = load_config(args.config)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.trials is not None:
        changes["trials"] = args.trials
    spec = spec.replace(**changes) if changes else spec
    res = run_sweep(spec, workers=args.workers, record_timing=not args.no_timing)
    res.write_csv(args.out)
    for row in res.rows:
        if row.error:
            print(f"numerical instability: {row.error}", file=sys.stderr)
    return EXIT_UNSTABLE if res.unstable else EXIT_OK


def _experiment(args) -> int:
    if args.trials < 1:
        raise ConfigError("trials must be positive")
    paths, unstable = run_experiment(args.name, args.out, trials=args.trials, seed=args.seed,
                                     workers=args.workers, record_timing=not args.no_timing)
    for p in paths:
        print(p)
    return EXIT_UNSTABLE if unstable else EXIT_OK


def _optimize(args) -> int:
    params = load_config(args.config).base
    mode = parse_enum(PowerControlMode, args.mode)
    scheme = parse_enum(SelectionScheme, args.scheme)
    sub = suboptimal_alpha(params, mode, scheme)
    out = {"mode": mode.value, "scheme": scheme.value, "alpha_subopt": sub.alpha,
           "objective": sub.objective, "outage_subopt": sub.achieved_outage.probability}
    if args.grid_points:
        opt = optimal_alpha_grid(params, mode, scheme, grid_points=args.grid_points)
        out.update(alpha_opt=opt.alpha, outage_opt=opt.achieved_outage.probability)
    print(json.dumps(out, indent=2))
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handler = {"run": _run, "experiment": _experiment, "optimize": _optimize}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalInstabilityError as exc:
        print(f"numerical instability: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE


if __name__ == "__main__":
    sys.exit(main())

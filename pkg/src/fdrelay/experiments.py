"""Parameter sweeps with analytic and Monte Carlo columns side by side."""

from __future__ import annotations

import csv
import dataclasses
import io
import itertools
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analytic import NumericalInstabilityError, analytic_outage
from .channel import NetworkParams, db_to_linear, linear_to_db
from .link import (DuplexMode, PowerControlMode, SelectionScheme, estimate_outages,
                   parse_enum)
from .optimizer import optimal_alpha_grid, suboptimal_alpha

CSV_HEADER = ("swept_value_db", "swept_value_linear", "scheme", "mode", "duplex",
              "analytic", "mc_estimate", "mc_halfwidth", "trials", "seed", "wall_ms")
MARKER_HEADER = ("scheme", "mode", "alpha_subopt", "alpha_opt", "outage_subopt",
                 "outage_opt", "objective_subopt")
DEFAULT_TRIALS = 1_000_000
EXPERIMENTS = ("fig2", "fig3", "fig4", "fig5", "fig6", "fig7")


class ConfigError(ValueError):
    """Malformed scenario file or sweep definition."""


def _fmt(x: float) -> str:
    return "nan" if x is None or math.isnan(x) else "%.12e" % x


@dataclass(frozen=True)
class SweepSpec:
    """One sweep: every value of ``swept_key`` crossed with schemes, modes and duplexes.

    ``swept_key`` is a parameter name, or several joined by ``+`` that take
    the same value (``p_s_max+p_r_max``). With ``values_in_db`` the values
    are dB and converted before use. ``cellular`` switches the Monte Carlo
    column to the CUE outage at the BS, which has no analytic column.
    """

    base: NetworkParams
    swept_key: str | None
    values: tuple[float, ...]
    schemes: tuple[SelectionScheme, ...] = (SelectionScheme.BULK, SelectionScheme.PER_SUBCARRIER)
    modes: tuple[PowerControlMode, ...] = (PowerControlMode.DYNAMIC, PowerControlMode.STATIC)
    duplexes: tuple[DuplexMode, ...] = (DuplexMode.FULL,)
    trials: int = DEFAULT_TRIALS
    seed: int = 0
    emit_analytic: bool = True
    emit_mc: bool = True
    values_in_db: bool = False
    cellular: bool = False
    name: str = "sweep"

    def __post_init__(self):
        for k in self.swept_keys:
            if k not in NetworkParams.field_names():
                raise ConfigError(f"unknown swept parameter {k!r}")
        if not self.values:
            raise ConfigError("sweep values must be non-empty")
        if self.emit_mc and self.trials < 1:
            raise ConfigError("trials must be positive when Monte Carlo is emitted")
        if not (self.schemes and self.modes and self.duplexes):
            raise ConfigError("schemes, modes and duplexes must be non-empty")

    @property
    def swept_keys(self) -> tuple[str, ...]:
        return tuple(self.swept_key.split("+")) if self.swept_key else ()

    def linear_values(self) -> list[float]:
        return [float(db_to_linear(v)) if self.values_in_db else float(v) for v in self.values]

    def params_at(self, value_linear: float) -> NetworkParams:
        if not self.swept_keys:
            return self.base
        changes = {k: value_linear for k in self.swept_keys}
        if any(k in ("n_relays", "n_subcarriers") for k in changes):
            changes = {k: (int(round(v)) if k in ("n_relays", "n_subcarriers") else v)
                       for k, v in changes.items()}
        try:
            return self.base.replace(**changes)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def configs(self):
        return list(itertools.product(self.schemes, self.modes, self.duplexes))

    def replace(self, **changes) -> "SweepSpec":
        return dataclasses.replace(self, **changes)


@dataclass
class SweepRow:
    swept_value_db: float
    swept_value_linear: float
    scheme: SelectionScheme
    mode: PowerControlMode
    duplex: DuplexMode
    analytic: float
    mc_estimate: float
    mc_halfwidth: float
    trials: int
    seed: int
    wall_ms: float
    error: str | None = None

    def csv_fields(self) -> list[str]:
        return [_fmt(self.swept_value_db), _fmt(self.swept_value_linear), self.scheme.value,
                self.mode.value, self.duplex.value, _fmt(self.analytic), _fmt(self.mc_estimate),
                _fmt(self.mc_halfwidth), str(self.trials), str(self.seed), "%.3f" % self.wall_ms]


@dataclass
class SweepResult:
    spec: SweepSpec
    rows: list[SweepRow] = field(default_factory=list)

    @property
    def unstable(self) -> bool:
        return any(r.error for r in self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.rows:
            w.writerow(r.csv_fields())
        return buf.getvalue()

    def write_csv(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv())
        return path

    def select(self, **match) -> list[SweepRow]:
        """Rows whose attributes equal every ``match`` item."""
        return [r for r in self.rows if all(getattr(r, k) == v for k, v in match.items())]


def run_sweep(spec: SweepSpec, workers: int = 1, record_timing: bool = True) -> SweepResult:
    """Evaluate every (value, scheme, mode, duplex) row of ``spec`` in spec order.

    Monte Carlo for all rows of one swept value shares one set of draws, and
    every value uses the same seed (common random numbers across the sweep).
    ``wall_ms`` is the row's analytic time plus its share of the Monte Carlo
    batch; with ``record_timing=False`` it is written as zero so reruns are
    byte-identical.
    """
    result = SweepResult(spec)
    configs = spec.configs()
    for raw, lin in zip(spec.values, spec.linear_values()):
        params = spec.params_at(lin)
        mc, mc_ms = {}, 0.0
        if spec.emit_mc:
            t0 = time.perf_counter()
            mc = estimate_outages(params, [(m, d, s) for s, m, d in configs], spec.trials,
                                  seed=spec.seed, workers=workers, cellular=spec.cellular)
            mc_ms = 1e3 * (time.perf_counter() - t0) / len(configs)
        for scheme, mode, duplex in configs:
            t0 = time.perf_counter()
            analytic, error = math.nan, None
            if spec.emit_analytic and not spec.cellular:
                try:
                    analytic = analytic_outage(params, mode, duplex, scheme)
                except NumericalInstabilityError as exc:
                    error = str(exc)
            ms = 1e3 * (time.perf_counter() - t0) + mc_ms
            est = mc.get((mode, duplex, scheme))
            result.rows.append(SweepRow(
                swept_value_db=raw if spec.values_in_db else (
                    linear_to_db(lin) if lin > 0 else math.nan),
                swept_value_linear=lin, scheme=scheme, mode=mode, duplex=duplex,
                analytic=analytic,
                mc_estimate=est.probability if est else math.nan,
                mc_halfwidth=est.half_width if est else math.nan,
                trials=spec.trials if est else 0, seed=spec.seed,
                wall_ms=ms if record_timing else 0.0, error=error))
    return result


# ---------------------------------------------------------------------------
# built-in experiments

_NK = ((2, 2), (2, 4), (4, 2), (4, 4))
_FULL_SCHEMES = (SelectionScheme.BULK, SelectionScheme.PER_SUBCARRIER)
_BOTH_MODES = (PowerControlMode.DYNAMIC, PowerControlMode.STATIC)


def _db_range(lo: float, hi: float, step: float) -> tuple[float, ...]:
    return tuple(float(x) for x in np.arange(lo, hi + step / 2, step))


def builtin_experiment(name: str, trials: int = DEFAULT_TRIALS,
                       seed: int = 0) -> tuple[SweepSpec, ...]:
    """Sweeps for one figure family; each spec becomes one CSV.

    fig2 sweeps the common power cap, fig3 the D2D link means with the
    random baseline, fig4 the BS-link and CUE-interference means, fig5 the
    CUE-BS mean for several kappa (D2D and cellular outage), fig6 the
    residual self-interference for all duplex modes and fig7 alpha.
    """
    base = NetworkParams.baseline()
    common = dict(trials=trials, seed=seed)
    if name == "fig2":
        return tuple(
            SweepSpec(base.replace(n_relays=n, n_subcarriers=k), "p_s_max+p_r_max",
                      _db_range(-10, 30, 5), values_in_db=True, name=f"fig2_N{n}_K{k}", **common)
            for n, k in _NK)
    unit = base.replace(n_relays=4, n_subcarriers=4)
    if name == "fig3":
        return tuple(
            SweepSpec(base.replace(n_relays=n, n_subcarriers=k), "mu_sr+mu_rd",
                      _db_range(10, 40, 5), values_in_db=True,
                      schemes=_FULL_SCHEMES + (SelectionScheme.RANDOM,),
                      name=f"fig3_N{n}_K{k}", **common)
            for n, k in _NK)
    if name == "fig4":
        return (
            SweepSpec(unit, "mu_sb+mu_rb", _db_range(0, 30, 5), values_in_db=True,
                      name="fig4a_N4_K4", **common),
            SweepSpec(unit, "mu_cr+mu_cd", _db_range(-10, 20, 5), values_in_db=True,
                      name="fig4b_N4_K4", **common),
        )
    if name == "fig5":
        specs = []
        for kappa in (2.0, 4.0, 8.0):
            p = unit.replace(kappa=kappa)
            specs.append(SweepSpec(p, "mu_cb", _db_range(0, 40, 5), values_in_db=True,
                                   name=f"fig5a_kappa{kappa:g}", **common))
            specs.append(SweepSpec(p, "mu_cb", _db_range(0, 40, 5), values_in_db=True,
                                   cellular=True, emit_analytic=False,
                                   name=f"fig5b_kappa{kappa:g}", **common))
        return tuple(specs)
    if name == "fig6":
        return (SweepSpec(unit, "phi_bar", _db_range(-10, 30, 5), values_in_db=True,
                          duplexes=tuple(DuplexMode), name="fig6_N4_K4", **common),)
    if name == "fig7":
        return (SweepSpec(unit, "alpha", tuple(float(a) for a in np.arange(1, 20) / 20),
                          name="fig7_N4_K4", **common),)
    raise ConfigError(f"unknown experiment {name!r}; choose from {', '.join(EXPERIMENTS)}")


def alpha_markers(spec: SweepSpec, grid_points: int = 101) -> list[dict]:
    """Surrogate and grid-optimal alpha for each (scheme, mode) of an alpha sweep."""
    rows = []
    for scheme in spec.schemes:
        for mode in spec.modes:
            sub = suboptimal_alpha(spec.base, mode, scheme)
            opt = optimal_alpha_grid(spec.base, mode, scheme, grid_points=grid_points,
                                     trials_per_point=spec.trials, seed=spec.seed)
            rows.append(dict(scheme=scheme.value, mode=mode.value, alpha_subopt=sub.alpha,
                             alpha_opt=opt.alpha,
                             outage_subopt=sub.achieved_outage.probability,
                             outage_opt=opt.achieved_outage.probability,
                             objective_subopt=sub.objective))
    return rows


def write_markers(rows: list[dict], path) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MARKER_HEADER)
        for r in rows:
            w.writerow([r["scheme"], r["mode"]] + [_fmt(r[k]) for k in MARKER_HEADER[2:]])
    return path


def run_experiment(name: str, out_dir, trials: int = DEFAULT_TRIALS, seed: int = 0,
                   workers: int = 1, record_timing: bool = True,
                   marker_grid_points: int = 101) -> tuple[list[Path], bool]:
    """Run a built-in experiment into ``out_dir``; returns (files, any_instability)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths, unstable = [], False
    for spec in builtin_experiment(name, trials, seed):
        res = run_sweep(spec, workers=workers, record_timing=record_timing)
        unstable |= res.unstable
        paths.append(res.write_csv(out_dir / f"{spec.name}.csv"))
        if name == "fig7":
            paths.append(write_markers(alpha_markers(spec, marker_grid_points), out_dir / f"{spec.name}_markers.csv"))
    return paths, unstable


# ---------------------------------------------------------------------------
# scenario files

_RUN_KEYS = {"trials", "seed", "schemes", "modes", "duplexes", "emit_analytic", "emit_mc",
             "cellular", "name"}
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _number(key: str, text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {text!r}") from None


def _flag(key: str, text: str) -> bool:
    t = text.lower()
    if t in _TRUE:
        return True
    if t in _FALSE:
        return False
    raise ConfigError(f"{key}: expected a boolean, got {text!r}")


def _enum_list(cls, key: str, text: str):
    try:
        return tuple(parse_enum(cls, v.strip()) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}") from None


def parse_config(text: str) -> SweepSpec:
    """Parse a flat ``key = value`` scenario file.

    Keys are :class:`NetworkParams` fields, optionally suffixed ``_db`` for
    values in dB. ``sweep.key`` (optionally ``_db``-suffixed) and
    ``sweep.values`` (comma separated) define the sweep; run options are
    ``trials``, ``seed``, ``schemes``, ``modes``, ``duplexes``,
    ``emit_analytic``, ``emit_mc``, ``cellular`` and ``name``. ``#`` starts
    a comment. Without a sweep block the file describes a single point.
    """
    params: dict[str, float] = {}
    run: dict[str, object] = {}
    sweep_key, sweep_values = None, None
    fields = NetworkParams.field_names()
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (x.strip() for x in line.split("=", 1))
        if key == "sweep.key":
            sweep_key = value
        elif key == "sweep.values":
            sweep_values = tuple(_number(key, v) for v in value.split(",") if v.strip())
        elif key in _RUN_KEYS:
            run[key] = value
        else:
            name, in_db = (key[:-3], True) if key.endswith("_db") else (key, False)
            if name not in fields:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            if name in params:
                raise ConfigError(f"line {lineno}: {name} given twice")
            x = _number(key, value)
            params[name] = float(db_to_linear(x)) if in_db else x
    try:
        base = NetworkParams.baseline(**params)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None

    kwargs: dict = {}
    if "trials" in run:
        kwargs["trials"] = int(_number("trials", run["trials"]))
    if "seed" in run:
        kwargs["seed"] = int(_number("seed", run["seed"]))
    if "schemes" in run:
        kwargs["schemes"] = _enum_list(SelectionScheme, "schemes", run["schemes"])
    if "modes" in run:
        kwargs["modes"] = _enum_list(PowerControlMode, "modes", run["modes"])
    if "duplexes" in run:
        kwargs["duplexes"] = _enum_list(DuplexMode, "duplexes", run["duplexes"])
    for key in ("emit_analytic", "emit_mc", "cellular"):
        if key in run:
            kwargs[key] = _flag(key, run[key])
    if "name" in run:
        kwargs["name"] = run["name"]

    if (sweep_key is None) != (sweep_values is None):
        raise ConfigError("sweep.key and sweep.values must be given together")
    in_db = False
    if sweep_key is None:
        sweep_values = (math.nan,)
    elif sweep_key.endswith("_db"):
        sweep_key, in_db = sweep_key[:-3], True
    spec = SweepSpec(base, sweep_key, sweep_values, values_in_db=in_db, **kwargs)
    if sweep_key is not None:
        # surface invalid swept values (alpha >= 1, negative gains) up front
        for v in spec.linear_values():
            spec.params_at(v)
    return spec


def load_config(path) -> SweepSpec:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return parse_config(text)

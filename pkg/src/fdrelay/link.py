"""Instantaneous link model and the Monte Carlo outage estimator.

All array functions accept a realization with an optional leading trial
axis. SIRs with a vanishing denominator are +inf.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .channel import (SELECTION_STREAM, ChannelRealization, NetworkParams,
                      sample_chunk, stream)

CHUNK_TRIALS = 1 << 15
WILSON_Z = 1.959963984540054
# relative slack when testing the cellular SIR against xi; under dynamic
# control with slack caps the SIR equals xi exactly, up to rounding
CELLULAR_RTOL = 1e-9


class PowerControlMode(enum.Enum):
    DYNAMIC = "dynamic"
    STATIC = "static"


class SelectionScheme(enum.Enum):
    BULK = "bulk"
    PER_SUBCARRIER = "ps"
    RANDOM = "random"


class DuplexMode(enum.Enum):
    FULL = "full"
    HALF = "half"
    IDEAL_FULL = "ideal"


def parse_enum(cls, value):
    if isinstance(value, cls):
        return value
    aliases = {"per_subcarrier": "ps", "per-subcarrier": "ps", "idealfull": "ideal",
               "ideal_full": "ideal", "ideal-full": "ideal"}
    key = str(value).strip().lower()
    return cls(aliases.get(key, key))


@dataclass(frozen=True)
class OutageEstimate:
    probability: float
    half_width: float = 0.0
    trials: int = 0
    source: str = "analytic"

    def __post_init__(self):
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError(f"probability out of range: {self.probability}")
        if self.half_width < 0:
            raise ValueError("half_width must be non-negative")

    def contains(self, value: float, widths: float = 3.0) -> bool:
        return abs(value - self.probability) <= widths * self.half_width


def wilson_half_width(successes: int, trials: int, z: float = WILSON_Z) -> float:
    """Half-width of the Wilson score interval for a binomial proportion."""
    p = successes / trials
    z2 = z * z
    return z / (1.0 + z2 / trials) * math.sqrt(p * (1.0 - p) / trials + z2 / (4.0 * trials * trials))


def outage_threshold(params: NetworkParams, duplex: DuplexMode) -> float:
    s = params.s
    return s * (s + 2.0) if duplex is DuplexMode.HALF else s


# ---------------------------------------------------------------------------
# powers and SIRs (array form)


def _safe_div(num, den):
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.true_divide(num, den)
    if np.ndim(out) == 0:
        return math.inf if den == 0 else float(out)
    # x/0 is already inf; only 0/0 needs patching
    nan = np.isnan(out)
    if nan.any():
        out[nan] = np.inf
    return out


def _bs_gain(real: ChannelRealization, params: NetworkParams, mode: PowerControlMode):
    return real.g_cb if mode is PowerControlMode.DYNAMIC else params.kappa


def source_powers(real: ChannelRealization, params: NetworkParams,
                  mode: PowerControlMode) -> np.ndarray:
    """``P_S(k) = min(alpha P_C G_CB(k) / (xi G_SB(k)), cap)``, shape ``[..., K]``."""
    budget = params.alpha * params.p_c * _bs_gain(real, params, mode) / params.xi
    return np.minimum(_safe_div(budget, real.g_sb), params.p_s_max)


def relay_powers(real: ChannelRealization, params: NetworkParams,
                 mode: PowerControlMode) -> np.ndarray:
    """Relay powers, shape ``[..., N, K]``."""
    budget = (1.0 - params.alpha) * params.p_c * _bs_gain(real, params, mode) / params.xi
    budget = np.expand_dims(budget, -2) if np.ndim(budget) else budget
    return np.minimum(_safe_div(budget, real.g_rb), params.p_r_max)


def first_hop_sirs(real, params, mode, duplex=DuplexMode.FULL) -> np.ndarray:
    p_s = np.expand_dims(source_powers(real, params, mode), -2)
    interference = params.p_c * real.g_cr
    if duplex is DuplexMode.FULL:
        interference = interference + real.phi
    return _safe_div(real.g_sr * p_s, interference)


def second_hop_sirs(real, params, mode) -> np.ndarray:
    p_r = relay_powers(real, params, mode)
    return _safe_div(real.g_rd * p_r, params.p_c * np.expand_dims(real.g_cd, -2))


def end_to_end_sirs(real, params, mode, duplex=DuplexMode.FULL) -> np.ndarray:
    """DF bottleneck: the weaker hop, shape ``[..., N, K]``."""
    return np.minimum(first_hop_sirs(real, params, mode, duplex),
                      second_hop_sirs(real, params, mode))


# ---------------------------------------------------------------------------
# single-index views


def source_power(k: int, real, params, mode) -> float:
    return float(source_powers(real, params, mode)[..., k])


def relay_power(n: int, k: int, real, params, mode) -> float:
    return float(relay_powers(real, params, mode)[..., n, k])


def sir_first_hop(n: int, k: int, real, params, mode, duplex=DuplexMode.FULL) -> float:
    return float(first_hop_sirs(real, params, mode, duplex)[..., n, k])


def sir_second_hop(n: int, k: int, real, params, mode) -> float:
    return float(second_hop_sirs(real, params, mode)[..., n, k])


def sir_end_to_end(n: int, k: int, real, params, mode, duplex=DuplexMode.FULL) -> float:
    return min(sir_first_hop(n, k, real, params, mode, duplex),
               sir_second_hop(n, k, real, params, mode))


# ---------------------------------------------------------------------------
# selection and outage


def selection_from_sirs(sirs: np.ndarray, scheme: SelectionScheme,
                        random_index=None) -> np.ndarray:
    """Selected relay per subcarrier, shape ``[..., K]``. Ties go to the lowest index."""
    n, k = sirs.shape[-2:]
    if scheme is SelectionScheme.BULK:
        idx = np.argmax(sirs.min(axis=-1), axis=-1)
    elif scheme is SelectionScheme.PER_SUBCARRIER:
        return np.argmax(sirs, axis=-2)
    else:
        idx = np.asarray(random_index)
    return np.broadcast_to(np.expand_dims(idx, -1), sirs.shape[:-2] + (k,)).copy()


def select_relays(real: ChannelRealization, params: NetworkParams, mode: PowerControlMode,
                  duplex: DuplexMode, scheme: SelectionScheme,
                  rng: np.random.Generator | None = None) -> np.ndarray:
    """Relay index chosen for every subcarrier.

    Bulk picks one relay maximizing the worst subcarrier; per-subcarrier
    picks the best relay on each subcarrier; random picks one relay
    uniformly for all subcarriers and needs ``rng``.
    """
    sirs = end_to_end_sirs(real, params, mode, duplex)
    random_index = None
    if scheme is SelectionScheme.RANDOM:
        if rng is None:
            raise ValueError("random selection needs an rng")
        random_index = rng.integers(0, real.n_relays, size=sirs.shape[:-2])
    return selection_from_sirs(sirs, scheme, random_index)


def _selected(sirs: np.ndarray, selection: np.ndarray) -> np.ndarray:
    return np.take_along_axis(sirs, np.expand_dims(selection, -2), axis=-2)[..., 0, :]


def worst_selected_sir(sirs: np.ndarray, scheme: SelectionScheme, random_index=None) -> np.ndarray:
    """``min_k`` of the end-to-end SIR on the selected relays."""
    if scheme is SelectionScheme.BULK:
        return sirs.min(axis=-1).max(axis=-1)
    if scheme is SelectionScheme.PER_SUBCARRIER:
        return sirs.max(axis=-2).min(axis=-1)
    return _selected(sirs, selection_from_sirs(sirs, scheme, random_index)).min(axis=-1)


def is_outage(real, params, mode, duplex, scheme, rng=None):
    """Any subcarrier below threshold (``s``, or ``s(s+2)`` for half duplex)."""
    sirs = end_to_end_sirs(real, params, mode, duplex)
    random_index = None
    if scheme is SelectionScheme.RANDOM:
        if rng is None:
            raise ValueError("random selection needs an rng")
        random_index = rng.integers(0, real.n_relays, size=sirs.shape[:-2])
    out = worst_selected_sir(sirs, scheme, random_index) < outage_threshold(params, duplex)
    return bool(out) if np.ndim(out) == 0 else out


def cellular_sirs(real, params, mode, selection) -> np.ndarray:
    """SIR at the BS on every subcarrier, given the selected relays."""
    p_s = source_powers(real, params, mode)
    p_r = _selected(relay_powers(real, params, mode), selection)
    g_rb = _selected(real.g_rb, selection)
    return _safe_div(params.p_c * real.g_cb, p_s * real.g_sb + p_r * g_rb)


# ---------------------------------------------------------------------------
# Monte Carlo


Config = tuple[PowerControlMode, DuplexMode, SelectionScheme]


def _chunk_counts(params: NetworkParams, configs: tuple[Config, ...], seed: int,
                  chunk: int, size: int, cellular: bool) -> np.ndarray:
    real = sample_chunk(params, seed, chunk, size)
    random_index = None
    if any(c[2] is SelectionScheme.RANDOM for c in configs):
        random_index = stream(seed, chunk, SELECTION_STREAM).integers(0, params.n_relays, size)
    counts = np.zeros(len(configs), dtype=np.int64)
    sir_cache: dict = {}
    worst_cache: dict = {}
    for i, (mode, duplex, scheme) in enumerate(configs):
        # half and ideal-full share SIRs; only the threshold differs
        si = DuplexMode.FULL if duplex is DuplexMode.FULL else DuplexMode.IDEAL_FULL
        if (mode, si) not in sir_cache:
            sir_cache[(mode, si)] = end_to_end_sirs(real, params, mode, si)
        sirs = sir_cache[(mode, si)]
        if cellular:
            sel = selection_from_sirs(sirs, scheme, random_index)
            bad = cellular_sirs(real, params, mode, sel) < params.xi * (1.0 - CELLULAR_RTOL)
            counts[i] = np.count_nonzero(bad)
        else:
            key = (mode, si, scheme)
            if key not in worst_cache:
                worst_cache[key] = worst_selected_sir(sirs, scheme, random_index)
            counts[i] = np.count_nonzero(worst_cache[key] < outage_threshold(params, duplex))
    return counts


def _chunks(trials: int) -> list[tuple[int, int]]:
    full, rest = divmod(trials, CHUNK_TRIALS)
    out = [(c, CHUNK_TRIALS) for c in range(full)]
    if rest:
        out.append((full, rest))
    return out


def _count_task(args):
    params, configs, seed, chunks, cellular = args
    total = np.zeros(len(configs), dtype=np.int64)
    for chunk, size in chunks:
        total += _chunk_counts(params, configs, seed, chunk, size, cellular)
    return total


def _count(params, configs, trials, seed, workers, cellular) -> np.ndarray:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    chunks = _chunks(trials)
    if workers <= 1 or len(chunks) == 1:
        return _count_task((params, configs, seed, chunks, cellular))
    parts = [chunks[w::workers] for w in range(workers)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        results = pool.map(_count_task, [(params, configs, seed, p, cellular) for p in parts if p])
        return sum(results)


def estimate_outages(params: NetworkParams, configs: Iterable[Config], trials: int,
                     seed: int = 0, workers: int = 1,
                     cellular: bool = False) -> dict[Config, OutageEstimate]:
    """Outage estimates for several configurations from the same draws.

    Every configuration sees the same realizations (and the same random
    relay picks), so the result for one configuration does not depend on
    which others are requested. Counts are exact integers summed over fixed
    chunks, hence independent of ``workers``. With ``cellular`` the
    per-subcarrier cellular outage is estimated instead, averaged over
    subcarriers (``trials * K`` Bernoulli samples).
    """
    configs = tuple(configs)
    counts = _count(params, configs, trials, seed, workers, cellular)
    n_samples = trials * (params.n_subcarriers if cellular else 1)
    return {
        c: OutageEstimate(int(x) / n_samples, wilson_half_width(int(x), n_samples),
                          trials, "monte-carlo")
        for c, x in zip(configs, counts)
    }


def estimate_outage(params: NetworkParams, mode: PowerControlMode, duplex: DuplexMode,
                    scheme: SelectionScheme, trials: int, seed: int = 0,
                    workers: int = 1) -> OutageEstimate:
    """Monte Carlo D2D outage probability with a 95% Wilson half-width."""
    cfg = (mode, duplex, scheme)
    return estimate_outages(params, [cfg], trials, seed, workers)[cfg]


def cellular_outage(params: NetworkParams, mode: PowerControlMode, duplex: DuplexMode,
                    scheme: SelectionScheme, trials: int, seed: int = 0,
                    workers: int = 1) -> OutageEstimate:
    """Probability that the CUE's SIR at the BS drops below ``xi`` on a subcarrier."""
    cfg = (mode, duplex, scheme)
    return estimate_outages(params, [cfg], trials, seed, workers, cellular=True)[cfg]

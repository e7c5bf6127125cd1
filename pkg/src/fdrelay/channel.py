"""Scenario parameters and exponential (Rayleigh-power) channel draws."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

RELAY_FAMILIES = ("g_sr", "g_rd", "g_cr", "g_rb", "phi")
SUBCARRIER_FAMILIES = ("g_cd", "g_sb", "g_cb")
FAMILIES = RELAY_FAMILIES + SUBCARRIER_FAMILIES
# stream id used for the random-selection baseline
SELECTION_STREAM = len(FAMILIES)


def db_to_linear(x_db):
    """Power decibels to a linear ratio, ``10**(x/10)``."""
    if np.ndim(x_db):
        return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x) if np.ndim(x) else 10.0 * math.log10(x)


def exp_cdf(g, mu):
    """CDF of an exponential gain with mean ``mu``: ``1 - exp(-g/mu)``."""
    g = np.asarray(g, dtype=float)
    if np.any(g < 0):
        raise ValueError("exp_cdf is defined for g >= 0")
    out = -np.expm1(-g / mu)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class NetworkParams:
    """One scenario. Gains, powers and thresholds are linear.

    ``p_s_max``/``p_r_max`` are the per-subcarrier power caps of source and
    relays, ``xi`` the cellular SIR threshold, ``s`` the D2D SIR threshold,
    ``alpha`` the source share of the interference budget and ``kappa`` the
    static power-control factor used in place of the CUE-BS gain.
    """

    mu_sr: float = 1000.0
    mu_rd: float = 1000.0
    mu_sb: float = 10.0
    mu_rb: float = 10.0
    mu_cr: float = 10.0 ** 0.2
    mu_cd: float = 10.0 ** 0.2
    mu_cb: float = 100.0
    phi_bar: float = 10.0 ** 0.5
    p_c: float = 1.0
    p_s_max: float = 1.0
    p_r_max: float = 1.0
    xi: float = 1.0
    s: float = 1.0
    alpha: float = 0.5
    kappa: float = 4.0
    n_relays: int = 2
    n_subcarriers: int = 2

    def __post_init__(self):
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if f.name in ("n_relays", "n_subcarriers"):
                if int(v) != v or v < 1:
                    raise ValueError(f"{f.name} must be an integer >= 1, got {v!r}")
                object.__setattr__(self, f.name, int(v))
            elif not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValueError(f"{f.name} must be finite and > 0, got {v!r}")
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")

    def replace(self, **changes) -> "NetworkParams":
        return dataclasses.replace(self, **changes)

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in dataclasses.fields(cls))

    @classmethod
    def baseline(cls, **overrides) -> "NetworkParams":
        """The baseline evaluation setting: 30/10/2/20/5 dB means, s=xi=P_C=1."""
        base = dict(
            mu_sr=db_to_linear(30), mu_rd=db_to_linear(30),
            mu_sb=db_to_linear(10), mu_rb=db_to_linear(10),
            mu_cr=db_to_linear(2), mu_cd=db_to_linear(2),
            mu_cb=db_to_linear(20), phi_bar=db_to_linear(5),
            p_c=1.0, xi=1.0, s=1.0, alpha=0.5, kappa=4.0,
        )
        base.update(overrides)
        return cls(**base)


def family_mean(params: NetworkParams, family: str) -> float:
    return params.phi_bar if family == "phi" else getattr(params, "mu_" + family[2:])


@dataclass
class ChannelRealization:
    """Instantaneous gains. Relay families are ``[..., N, K]``, the others ``[..., K]``.

    A leading batch axis (trials) is allowed; all engine functions index
    relays and subcarriers from the right.
    """

    g_sr: np.ndarray
    g_rd: np.ndarray
    g_cr: np.ndarray
    g_rb: np.ndarray
    phi: np.ndarray
    g_cd: np.ndarray
    g_sb: np.ndarray
    g_cb: np.ndarray

    @property
    def n_relays(self) -> int:
        return self.g_sr.shape[-2]

    @property
    def n_subcarriers(self) -> int:
        return self.g_sr.shape[-1]

    def without_si(self) -> "ChannelRealization":
        return dataclasses.replace(self, phi=np.zeros_like(self.phi))


def _exponential(u: np.ndarray, mu: float) -> np.ndarray:
    # inverse CDF; u in [0, 1) so log1p(-u) is finite
    return -mu * np.log1p(-u)


def sample_realization(params: NetworkParams, rng: np.random.Generator,
                       size: int | None = None) -> ChannelRealization:
    """Draw every gain independently by inverse-CDF sampling from ``rng``."""
    n, k = params.n_relays, params.n_subcarriers
    lead = () if size is None else (size,)
    arrays = {}
    for fam in FAMILIES:
        shape = lead + ((n, k) if fam in RELAY_FAMILIES else (k,))
        arrays[fam] = _exponential(rng.random(shape), family_mean(params, fam))
    return ChannelRealization(**arrays)


def stream(seed: int, chunk: int, family: int, relay: int = 0) -> np.random.Generator:
    """Independent counter-based stream for one (chunk, family, relay) cell."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(chunk, family, relay))
    return np.random.Generator(np.random.Philox(ss))


def sample_chunk(params: NetworkParams, seed: int, chunk: int, size: int) -> ChannelRealization:
    """Realizations for one Monte Carlo chunk of ``size`` trials.

    Each relay of each family has its own stream, and subcarriers are laid
    out as consecutive blocks of ``size`` draws, so a scenario with fewer
    relays or subcarriers sees exactly a sub-array of the draws of a larger
    one. That keeps outage comparisons across N and K on common randomness.
    """
    n, k = params.n_relays, params.n_subcarriers
    arrays = {}
    for f, fam in enumerate(FAMILIES):
        mu = family_mean(params, fam)
        # stored trial-fastest; the transposed views keep reductions over
        # relays and subcarriers elementwise
        if fam in RELAY_FAMILIES:
            a = np.empty((n, k, size))
            for r in range(n):
                a[r] = _exponential(stream(seed, chunk, f, r).random((k, size)), mu)
            arrays[fam] = a.transpose(2, 0, 1)
        else:
            arrays[fam] = _exponential(stream(seed, chunk, f).random((k, size)), mu).T
    return ChannelRealization(**arrays)

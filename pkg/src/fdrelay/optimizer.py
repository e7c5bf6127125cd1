"""Choosing the power-coordination factor alpha.

The surrogates replace instantaneous gains by their means: ``omega`` keeps
the expectation over the CUE-BS gain (dynamic control) and ``gamma_static``
fixes it at ``kappa``. Both are quasi-concave in alpha, so a golden-section
search finds the surrogate maximizer; ``optimal_alpha_grid`` is the brute
force oracle on the true outage.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .analytic import analytic_outage, NumericalInstabilityError
from .channel import NetworkParams
from .link import (DuplexMode, OutageEstimate, PowerControlMode, SelectionScheme,
                   estimate_outage)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
ALPHA_TOL = 1e-6


class NonUnimodalWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class AlphaSearchResult:
    alpha: float
    objective: float
    achieved_outage: OutageEstimate | None = None
    method: str = "surrogate-search"

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")


def rho(params: NetworkParams) -> float:
    """Breakpoint where the source and relay caps bind at the same CUE gain."""
    x = params.mu_sb * params.mu_rd * (params.p_c * params.mu_cr + params.phi_bar)
    return x / (params.p_c * params.mu_sr * params.mu_rb * params.mu_cd + x)


def _one_minus_exp(x: float) -> float:
    return -math.expm1(-x) if math.isfinite(x) else 1.0


def omega(alpha: float, params: NetworkParams) -> float:
    """Mean over the CUE-BS gain of the smaller of the two mean-gain hop SIRs."""
    p = params
    interf = p.p_c * p.mu_cr + p.phi_bar
    src_cap = p.p_s_max * p.mu_sr / interf
    rel_cap = p.p_r_max * p.mu_rd / (p.p_c * p.mu_cd)
    r = rho(p)
    if alpha < r:
        # the source hop is the weaker one for every g
        slope = alpha * p.p_c * p.mu_sr * p.mu_cb / (p.xi * p.mu_sb * interf)
        if src_cap > rel_cap:
            knee = (p.xi * p.p_r_max * p.mu_sb * p.mu_rd * interf
                    / (alpha * p.p_c ** 2 * p.mu_sr * p.mu_cb * p.mu_cd))
        else:
            knee = p.p_s_max * p.xi * p.mu_sb / (alpha * p.p_c * p.mu_cb)
    else:
        slope = (1.0 - alpha) * p.mu_rd * p.mu_cb / (p.xi * p.mu_rb * p.mu_cd)
        if src_cap > rel_cap:
            knee = p.p_r_max * p.xi * p.mu_rb / ((1.0 - alpha) * p.p_c * p.mu_cb)
        else:
            knee = (p.p_s_max * p.xi * p.mu_sr * p.mu_rb * p.mu_cd
                    / ((1.0 - alpha) * p.mu_rd * p.mu_cb * interf))
    return slope * _one_minus_exp(knee)


def gamma_static(alpha: float, params: NetworkParams) -> float:
    """Smaller of the two mean-gain hop SIRs at ``g = kappa``."""
    p = params
    g1 = p.mu_sr * min(alpha * p.p_c * p.kappa / (p.xi * p.mu_sb), p.p_s_max) / (
        p.p_c * p.mu_cr + p.phi_bar)
    g2 = p.mu_rd * min((1.0 - alpha) * p.p_c * p.kappa / (p.xi * p.mu_rb), p.p_r_max) / (
        p.p_c * p.mu_cd)
    return min(g1, g2)


def surrogate(mode: PowerControlMode) -> Callable[[float, NetworkParams], float]:
    return omega if mode is PowerControlMode.DYNAMIC else gamma_static


def is_unimodal(values) -> bool:
    """True if ``values`` rise (weakly) and then fall (weakly), never rising again."""
    diffs = np.sign(np.diff(np.asarray(values, dtype=float)))
    diffs = diffs[diffs != 0]
    return int(np.count_nonzero(np.diff(diffs) > 0)) == 0


def maximize_quasiconcave(objective: Callable[[float], float], tol: float = ALPHA_TOL,
                          lo: float = 0.0, hi: float = 1.0) -> AlphaSearchResult:
    """Golden-section search for the maximizer of a quasi-concave function.

    The best evaluated point is returned, so plateaus are harmless. If the
    probed values, sorted by abscissa, are not unimodal the bracket logic
    cannot be trusted; a :class:`NonUnimodalWarning` is raised and the best
    point seen is still returned.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    seen: dict[float, float] = {}

    def f(x):
        if x not in seen:
            seen[x] = float(objective(x))
        return seen[x]

    a, b = lo, hi
    c, d = b - GOLDEN * (b - a), a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    f(0.5 * (a + b))
    xs = sorted(seen)
    if not is_unimodal([seen[x] for x in xs]):
        warnings.warn("objective is not unimodal on the probed points", NonUnimodalWarning)
    # ties resolved towards the smaller abscissa
    x_best = max(xs, key=lambda x: (seen[x], -x))
    return AlphaSearchResult(alpha=x_best, objective=seen[x_best])


def suboptimal_alpha(params: NetworkParams, mode: PowerControlMode,
                     scheme: SelectionScheme = SelectionScheme.PER_SUBCARRIER,
                     duplex: DuplexMode = DuplexMode.FULL,
                     tol: float = ALPHA_TOL) -> AlphaSearchResult:
    """Maximize the surrogate and report the analytic outage at its argmax."""
    fn = surrogate(mode)
    res = maximize_quasiconcave(lambda a: fn(a, params), tol)
    outage = analytic_outage(params.replace(alpha=res.alpha), mode, duplex, scheme)
    return AlphaSearchResult(res.alpha, res.objective,
                             OutageEstimate(outage, 0.0, 0, "analytic"), "surrogate-search")


def alpha_grid(grid_points: int) -> np.ndarray:
    """Uniform interior grid ``i / (G + 1)``, ``i = 1..G``; endpoints excluded."""
    if grid_points < 3:
        raise ValueError("grid_points must be >= 3")
    return np.arange(1, grid_points + 1) / (grid_points + 1)


def optimal_alpha_grid(params: NetworkParams, mode: PowerControlMode,
                       scheme: SelectionScheme = SelectionScheme.PER_SUBCARRIER,
                       duplex: DuplexMode = DuplexMode.FULL, grid_points: int = 101,
                       trials_per_point: int = 100_000, seed: int = 0,
                       use_analytic: bool = True) -> AlphaSearchResult:
    """Brute-force argmin of the outage over the alpha grid; ties go to the smaller alpha.

    The analytic outage is used where it is defined; otherwise (or with
    ``use_analytic=False``) each point gets its own Monte Carlo seed.
    """
    best = None
    for i, a in enumerate(alpha_grid(grid_points)):
        p = params.replace(alpha=float(a))
        est = None
        if use_analytic and scheme is not SelectionScheme.RANDOM:
            try:
                est = OutageEstimate(analytic_outage(p, mode, duplex, scheme), 0.0, 0, "analytic")
            except NumericalInstabilityError:
                est = None
        if est is None:
            est = estimate_outage(p, mode, duplex, scheme, trials_per_point, seed=seed + i)
        if best is None or est.probability < best[1].probability:
            best = (float(a), est)
    alpha, est = best
    return AlphaSearchResult(alpha, surrogate(mode)(alpha, params), est, "grid-oracle")

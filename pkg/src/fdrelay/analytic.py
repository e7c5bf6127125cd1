"""Exact outage probabilities for bulk and per-subcarrier relay selection.

The cross-relay correlation comes only from the CUE-BS gain ``g``, the
CUE-destination gain ``h`` and the source-BS gain ``l``. Conditioned on
them, relays are independent and each subcarrier fails on a given relay
with probability ``Xi = 1 - (1 - Xi1)(1 - Xi2)``. Averaging out ``l`` and
``h`` is done in closed form (``phi1``, ``phi2``); the remaining average
over ``g`` is a single integral under dynamic power control and a point
evaluation at ``g = kappa`` under static control.

Every function here takes a ``duplex`` argument: half duplex and ideal full
duplex drop the residual self-interference (``phi_bar -> 0``), and half
duplex also raises the threshold to ``s (s + 2)``.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from . import quadrature
from .channel import NetworkParams
from .link import DuplexMode, PowerControlMode, SelectionScheme, outage_threshold
from .special import (ROOT_MERGE_RTOL, compositions, multinomial, neumaier_sum,
                      normalized_chi, scaled_expn)

MAX_ANALYTIC_RELAYS = 12
PROBABILITY_SLACK = 1e-6
# phi1/phi2 switch to direct integration when sum|terms| exceeds this multiple
# of the alternating sum (about 1e5 * eps relative error otherwise)
ALTERNATING_COND_MAX = 1e5
BLOCK_EPSREL = 1e-10


class NumericalInstabilityError(ArithmeticError):
    """An alternating sum left [0, 1] by more than rounding can explain."""


def _effective(params: NetworkParams, duplex: DuplexMode) -> tuple[float, float]:
    """(threshold, residual SI mean) as seen by the formulas."""
    phi = params.phi_bar if duplex is DuplexMode.FULL else 0.0
    return outage_threshold(params, duplex), phi


# ---------------------------------------------------------------------------
# conditional a-priori outage


def f_z_cdf(z, params: NetworkParams):
    """CDF of the relay interference ``P_C G_CR + phi``."""
    z = np.asarray(z, dtype=float)
    phi, m = params.phi_bar, params.p_c * params.mu_cr
    if abs(phi - m) < ROOT_MERGE_RTOL * max(phi, m):
        out = 1.0 - (z + phi) / phi * np.exp(-z / phi)
    else:
        out = (phi * -np.expm1(-z / phi) - m * -np.expm1(-z / m)) / (phi - m)
    return float(out) if out.ndim == 0 else out


def f_w_cdf(w, params: NetworkParams):
    """CDF of ``G_SR / (P_C G_CR + phi)``."""
    w = np.asarray(w, dtype=float)
    mu = params.mu_sr
    with np.errstate(over="ignore"):
        out = xi_e2e(_ratio(params.p_c * params.mu_cr * w / mu), _ratio(params.phi_bar * w / mu))
    return float(out) if out.ndim == 0 else out


def _first_hop_success(p_s, params: NetworkParams, duplex: DuplexMode):
    """``1 - Xi1`` at source power ``p_s`` (zero power never succeeds)."""
    s, phi = _effective(params, duplex)
    p_s = np.asarray(p_s, dtype=float)
    with np.errstate(divide="ignore"):
        x1 = params.p_c * params.mu_cr * s / (p_s * params.mu_sr)
        x2 = phi * s / (p_s * params.mu_sr)
    return 1.0 / ((1.0 + x1) * (1.0 + x2))


def _ratio(x):
    # x / (1 + x), finite at x = inf
    with np.errstate(invalid="ignore"):
        return np.where(np.isinf(x), 1.0, x / (1.0 + x))


def xi1(p_s, params: NetworkParams, duplex: DuplexMode = DuplexMode.FULL):
    """First-hop a-priori outage for a fixed source power."""
    s, phi = _effective(params, duplex)
    p_s = np.asarray(p_s, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        a = _ratio(params.p_c * params.mu_cr * s / (p_s * params.mu_sr))
        b = _ratio(phi * s / (p_s * params.mu_sr))
    out = xi_e2e(a, b)
    out = np.where(p_s == 0, 1.0, out)
    return float(out) if out.ndim == 0 else out


def _second_hop_terms(g, params: NetworkParams, duplex: DuplexMode):
    s, _ = _effective(params, duplex)
    c = params.p_c * s / (params.p_r_max * params.mu_rd)
    w = (1.0 - params.alpha) * params.p_c * np.asarray(g, dtype=float) / (
        params.p_r_max * params.mu_rb * params.xi)
    a = (1.0 - params.alpha) * params.mu_rd
    b = params.mu_rb * params.xi * s
    return c, w, a, b


def xi2(g_bar, h_bar, params: NetworkParams, duplex: DuplexMode = DuplexMode.FULL):
    """Second-hop a-priori outage given the CUE-BS and CUE-destination gains."""
    g_bar = np.asarray(g_bar, dtype=float)
    h_bar = np.asarray(h_bar, dtype=float)
    c, w, a, b = _second_hop_terms(g_bar, params, duplex)
    with np.errstate(invalid="ignore", divide="ignore"):
        # share of the relay-BS draws for which the power constraint binds
        tail = np.where(a * g_bar + b * h_bar > 0, b * h_bar / (a * g_bar + b * h_bar), 0.0)
    # 1 - e^{-ch} (1 - e^{-w} tail), written as two non-negative terms
    out = -np.expm1(-c * h_bar) + np.exp(-c * h_bar) * np.exp(-w) * tail
    return float(out) if out.ndim == 0 else out


def xi_e2e(xi1_value, xi2_value):
    """DF bottleneck: a subcarrier fails if either hop does."""
    return xi1_value + xi2_value - xi1_value * xi2_value


# ---------------------------------------------------------------------------
# averages over the source-BS gain l


def vartheta(p: int, g_bar, params: NetworkParams, duplex: DuplexMode = DuplexMode.FULL):
    """``E_l[(1 - Xi1)^p]`` at CUE-BS gain ``g_bar``.

    Below ``l = u`` the source sits at its cap; above it ``P_S = c/l`` and
    ``1 - Xi1 = prod_i a_i / (l + a_i)``, whose ``p``-th power integrates
    against the exponential density to a chi function.
    """
    g = np.atleast_1d(np.asarray(g_bar, dtype=float))
    out = _vartheta_all(p, g, params, duplex)[p]
    return float(out[0]) if np.ndim(g_bar) == 0 else out


def _vartheta_all(pmax: int, g: np.ndarray, params: NetworkParams,
                  duplex: DuplexMode) -> np.ndarray:
    """``vartheta(p, g)`` for ``p = 0..pmax``, shape ``(pmax + 1, len(g))``."""
    s, phi = _effective(params, duplex)
    out = np.ones((pmax + 1, g.size))
    if pmax == 0:
        return out
    cap_success = float(_first_hop_success(params.p_s_max, params, duplex))
    ku = params.alpha * params.p_c / (params.p_s_max * params.xi)
    root_k = [params.alpha * params.mu_sr / (params.xi * params.mu_cr * s)]
    if phi > 0:
        root_k.append(params.alpha * params.p_c * params.mu_sr / (phi * params.xi * s))
    top = max(root_k)
    ratios = [k / top for k in root_k]
    v = ku / top

    pos = g > 0
    gp = g[pos]
    u = ku * gp
    below = -np.expm1(-u / params.mu_sb)
    above = np.exp(-u / params.mu_sb) / params.mu_sb
    beta = top * gp / params.mu_sb
    for p in range(1, pmax + 1):
        core = normalized_chi([p] * len(ratios), ratios, v, beta)
        weighted = top * gp * math.prod(r**p for r in ratios) * core
        val = np.zeros(g.size)
        val[pos] = below * cap_success**p + above * weighted
        out[p] = val
    return out


def phi1(n: int, g_bar, params: NetworkParams, duplex: DuplexMode = DuplexMode.FULL):
    """``E_l[Xi1^n]`` by the binomial expansion over ``vartheta``.

    Where the alternating sum cancels too much to be trusted (see
    :data:`ALTERNATING_COND_MAX`) the expectation is integrated directly.
    """
    g = np.atleast_1d(np.asarray(g_bar, dtype=float))
    moments = _vartheta_all(n, g, params, duplex)
    out = _alternate_checked(moments, n, g, lambda gi: _phi1_direct(n, gi, params, duplex))
    return float(out[0]) if np.ndim(g_bar) == 0 else out


def _alternate(moments: np.ndarray, nmax: int) -> np.ndarray:
    """``sum_p C(n,p) (-1)^p moments[p]`` for every ``n <= nmax``."""
    out = np.empty((nmax + 1,) + moments.shape[1:])
    for n in range(nmax + 1):
        out[n] = neumaier_sum([math.comb(n, p) * (-1) ** p * moments[p] for p in range(n + 1)])
    return out


def _alternate_checked(moments: np.ndarray, n: int, g: np.ndarray, direct) -> np.ndarray:
    """Order-``n`` alternating sum, replaced by ``direct(g_i)`` where ill-conditioned."""
    terms = [math.comb(n, p) * (-1) ** p * moments[p] for p in range(n + 1)]
    out = neumaier_sum(terms)
    size = np.sum(np.abs(terms), axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        bad = ~(size <= ALTERNATING_COND_MAX * np.abs(out))
    for i in np.flatnonzero(bad):
        out[i] = direct(float(g[i]))
    return out


def _exp_average(f) -> float:
    """``int_0^inf f(y) e^-y dy`` on ``y = x / (1 - x)``, smooth up to ``x = 1``."""
    def mapped(x):
        y = x / (1.0 - x)
        return f(y) * np.exp(-y) / (1.0 - x) ** 2

    val, _ = quadrature.integrate(mapped, 0.0, 1.0, epsrel=BLOCK_EPSREL, epsabs=0.0)
    return float(val)


def _phi1_direct(n: int, g: float, params: NetworkParams, duplex: DuplexMode) -> float:
    # the cap binds for l < u; above it l = u + mu_SB y with y ~ Exp(1)
    u = params.alpha * params.p_c * g / (params.p_s_max * params.xi)
    below = -math.expm1(-u / params.mu_sb) * float(xi1(params.p_s_max, params, duplex)) ** n

    def f(y):
        p_s = params.alpha * params.p_c * g / (params.xi * (u + params.mu_sb * y))
        return xi1(p_s, params, duplex) ** n

    return below + math.exp(-u / params.mu_sb) * _exp_average(f)


def _phi1_all(nmax, g, params, duplex):
    return _alternate(_vartheta_all(nmax, g, params, duplex), nmax)


# ---------------------------------------------------------------------------
# averages over the CUE-destination gain h


def theta_fn(p: int, q: int, g_bar, params: NetworkParams,
             duplex: DuplexMode = DuplexMode.FULL):
    """``int_0^inf [A g e^-w / (A g + B h)]^q e^(-p c h) f_H(h) dh``.

    ``f_H`` is the exponential density of ``G_CD``; ``theta(0, 0) = 1``.
    """
    if not 0 <= q <= p:
        raise ValueError("need 0 <= q <= p")
    g = np.atleast_1d(np.asarray(g_bar, dtype=float))
    out = _theta(p, q, g, params, duplex)
    return float(out[0]) if np.ndim(g_bar) == 0 else out


def _theta(p, q, g, params, duplex):
    c, w, a, b = _second_hop_terms(g, params, duplex)
    lam = p * c + 1.0 / params.mu_cd
    if q == 0:
        return np.full(g.shape, 1.0 / (lam * params.mu_cd))
    out = np.zeros(g.shape)
    pos = g > 0
    k0 = a * g[pos] / b
    # k0**q * k0**(1-q) e^y E_q(y) with y = lam k0
    out[pos] = np.exp(-w[pos] * q) * k0 * scaled_expn(q, lam * k0) / params.mu_cd
    return out


def _eta_all(pmax, g, params, duplex):
    """``E_h[(1 - Xi2)^p]`` for ``p = 0..pmax``."""
    _, w, _, _ = _second_hop_terms(g, params, duplex)
    capped = -np.expm1(-w)
    out = np.empty((pmax + 1, g.size))
    for p in range(pmax + 1):
        out[p] = neumaier_sum([math.comb(p, q) * capped ** (p - q) * _theta(p, q, g, params, duplex)
                               for q in range(p + 1)])
    return out


def phi2(n: int, g_bar, params: NetworkParams, duplex: DuplexMode = DuplexMode.FULL):
    """``E_h[Xi2^n]``: the double binomial sum over ``theta_fn``.

    Falls back to direct integration over ``h`` where the sum is ill-conditioned.
    """
    g = np.atleast_1d(np.asarray(g_bar, dtype=float))
    moments = _eta_all(n, g, params, duplex)
    out = _alternate_checked(moments, n, g, lambda gi: _phi2_direct(n, gi, params, duplex))
    return float(out[0]) if np.ndim(g_bar) == 0 else out


def _phi2_direct(n: int, g: float, params: NetworkParams, duplex: DuplexMode) -> float:
    return _exp_average(lambda y: xi2(g, params.mu_cd * y, params, duplex) ** n)


def _phi2_all(nmax, g, params, duplex):
    return _alternate(_eta_all(nmax, g, params, duplex), nmax)


# ---------------------------------------------------------------------------
# selection


@lru_cache(maxsize=None)
def _bulk_terms(n: int) -> tuple[tuple[int, int, int], ...]:
    # (coefficient, power of Xi1, power of Xi2) for (1 - Xi1)^n (1 - Xi2)^n
    return tuple((multinomial(c) * (-1) ** (c[1] + c[2]), c[1] + c[3], c[2] + c[3])
                 for c in compositions(n, 4))


@lru_cache(maxsize=None)
def _ps_terms(n: int) -> tuple[tuple[int, int, int], ...]:
    # (coefficient, power of Xi1, power of Xi2) for Xi^n
    return tuple((multinomial(c) * (-1) ** c[2], c[0] + c[2], c[1] + c[2])
                 for c in compositions(n, 3))


def _moments(nmax, g, params, duplex):
    return _phi1_all(nmax, g, params, duplex), _phi2_all(nmax, g, params, duplex)


def bulk_integrand(g, params: NetworkParams, duplex: DuplexMode = DuplexMode.FULL) -> np.ndarray:
    """``E[(1 - Xi)^n | g]`` for ``n = 0..N`` via the 4-part multinomial; ``(N+1, len(g))``."""
    g = np.atleast_1d(np.asarray(g, dtype=float))
    big_n = params.n_relays
    p1, p2 = _moments(big_n, g, params, duplex)
    return np.stack([neumaier_sum([coef * p1[i] * p2[j] for coef, i, j in _bulk_terms(n)])
                     for n in range(big_n + 1)])


def ps_integrand(g, params: NetworkParams, duplex: DuplexMode = DuplexMode.FULL) -> np.ndarray:
    """``E[Xi^N | g]`` via the 3-part multinomial."""
    g = np.atleast_1d(np.asarray(g, dtype=float))
    big_n = params.n_relays
    p1, p2 = _moments(big_n, g, params, duplex)
    return neumaier_sum([coef * p1[i] * p2[j] for coef, i, j in _ps_terms(big_n)])


def average_over_cue_gain(fn, params: NetworkParams, epsrel: float = 1e-10):
    """``E_g[fn(g)]`` for exponential ``g`` with mean ``mu_cb``.

    Substituting ``t = 1 - exp(-g/mu_cb)`` turns the density into a unit
    weight on ``[0, 1)``.
    """
    def integrand(t):
        return fn(-params.mu_cb * np.log1p(-t))

    value, _ = quadrature.integrate(integrand, 0.0, 1.0, epsrel=epsrel, epsabs=1e-15)
    return value


def _check_relays(params):
    if params.n_relays > MAX_ANALYTIC_RELAYS:
        raise NumericalInstabilityError(
            f"N={params.n_relays} exceeds {MAX_ANALYTIC_RELAYS}; the alternating "
            "sums lose all precision, use Monte Carlo")


def _clamp(raw: float) -> float:
    if not -PROBABILITY_SLACK <= raw <= 1.0 + PROBABILITY_SLACK or math.isnan(raw):
        raise NumericalInstabilityError(f"outage {raw!r} outside [0, 1]")
    return min(max(raw, 0.0), 1.0)


def _bulk_from_phi(phi_n: np.ndarray, params: NetworkParams) -> float:
    big_n, k = params.n_relays, params.n_subcarriers
    return _clamp(math.fsum(math.comb(big_n, n) * (-1) ** n * float(phi_n[n]) ** k
                            for n in range(big_n + 1)))


def _ps_from_psi(psi: float, params: NetworkParams) -> float:
    return _clamp(1.0 - (1.0 - float(psi)) ** params.n_subcarriers)


def outage_bulk_dynamic(params: NetworkParams, duplex: DuplexMode = DuplexMode.FULL,
                        average=average_over_cue_gain) -> float:
    """``average(fn, params)`` takes the expectation over the CUE-BS gain;
    swapping in a point mass at ``kappa`` recovers the static closed form."""
    _check_relays(params)
    phi_n = average(lambda g: bulk_integrand(g, params, duplex), params)
    return _bulk_from_phi(phi_n, params)


def outage_bulk_static(params: NetworkParams, duplex: DuplexMode = DuplexMode.FULL) -> float:
    _check_relays(params)
    return _bulk_from_phi(bulk_integrand(params.kappa, params, duplex)[:, 0], params)


def outage_ps_dynamic(params: NetworkParams, duplex: DuplexMode = DuplexMode.FULL,
                      average=average_over_cue_gain) -> float:
    _check_relays(params)
    psi = average(lambda g: ps_integrand(g, params, duplex), params)
    return _ps_from_psi(psi, params)


def outage_ps_static(params: NetworkParams, duplex: DuplexMode = DuplexMode.FULL) -> float:
    _check_relays(params)
    return _ps_from_psi(ps_integrand(params.kappa, params, duplex)[0], params)


def outage_random(params: NetworkParams, mode: PowerControlMode,
                  duplex: DuplexMode = DuplexMode.FULL) -> float:
    """One relay drawn uniformly for all subcarriers: bulk selection over a single relay."""
    return analytic_outage(params.replace(n_relays=1), mode, duplex, SelectionScheme.BULK)


def analytic_outage(params: NetworkParams, mode: PowerControlMode,
                    duplex: DuplexMode, scheme: SelectionScheme) -> float:
    if scheme is SelectionScheme.RANDOM:
        return outage_random(params, mode, duplex)
    table = {
        (PowerControlMode.DYNAMIC, SelectionScheme.BULK): outage_bulk_dynamic,
        (PowerControlMode.STATIC, SelectionScheme.BULK): outage_bulk_static,
        (PowerControlMode.DYNAMIC, SelectionScheme.PER_SUBCARRIER): outage_ps_dynamic,
        (PowerControlMode.STATIC, SelectionScheme.PER_SUBCARRIER): outage_ps_static,
    }
    return table[(mode, scheme)](params, duplex)


def outage_half_analytic(params: NetworkParams, scheme: SelectionScheme,
                         mode: PowerControlMode = PowerControlMode.DYNAMIC) -> float:
    """Half duplex: no self-interference, threshold ``s (s + 2)``."""
    return analytic_outage(params, mode, DuplexMode.HALF, scheme)

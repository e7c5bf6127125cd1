import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from conftest import perturbed, scenarios
from fdrelay import analytic as an
from fdrelay.channel import NetworkParams
from fdrelay.link import (DuplexMode, PowerControlMode, SelectionScheme, estimate_outages)

DYN, STA = PowerControlMode.DYNAMIC, PowerControlMode.STATIC
FULL, HALF, IDEAL = DuplexMode.FULL, DuplexMode.HALF, DuplexMode.IDEAL_FULL
BULK, PS = SelectionScheme.BULK, SelectionScheme.PER_SUBCARRIER


# -- conditional a-priori outage ---------------------------------------------

def test_xi1_hand_value(baseline):
    expected = 1 - 1e6 / ((1000 + baseline.mu_cr) * (1000 + baseline.phi_bar))
    assert an.xi1(1.0, baseline) == pytest.approx(expected, rel=1e-12)
    assert an.xi1(1.0, baseline) == pytest.approx(4.73e-3, rel=2e-3)


def test_xi1_limits(baseline):
    assert an.xi1(1.0, baseline.replace(s=1e-300)) == pytest.approx(0.0, abs=1e-290)
    assert an.xi1(1.0, baseline.replace(s=1e300)) == 1.0
    assert an.xi1(0.0, baseline) == 1.0


@pytest.mark.parametrize("seed", range(4))
def test_xi1_matches_defining_integral(seed):
    p = perturbed(np.random.default_rng(seed))
    for duplex in (FULL, HALF):
        assert an.xi1(0.7, p, duplex) == pytest.approx(oracles.first_hop_outage(0.7, p, duplex),
                                                       rel=1e-8)


def test_f_w_consistent_with_xi1(baseline):
    for p_s in (0.1, 1.0, 7.0):
        assert an.f_w_cdf(baseline.s / p_s, baseline) == pytest.approx(an.xi1(p_s, baseline), rel=1e-13)
    assert an.f_w_cdf(0.0, baseline) == 0.0
    assert an.f_w_cdf(1e300, baseline) == pytest.approx(1.0)


def test_f_w_empirical(baseline):
    rng = np.random.default_rng(0)
    n = 1_000_000
    w = rng.exponential(baseline.mu_sr, n) / (baseline.p_c * rng.exponential(baseline.mu_cr, n)
                                           + rng.exponential(baseline.phi_bar, n))
    w.sort()
    ks = np.max(np.abs(an.f_w_cdf(w, baseline) - np.arange(1, n + 1) / n))
    assert ks < 1.628 / math.sqrt(n)


def test_f_z_branches(baseline):
    eq = baseline.replace(phi_bar=baseline.p_c * baseline.mu_cr)
    assert an.f_z_cdf(0.0, baseline) == 0.0
    assert an.f_z_cdf(eq.phi_bar, eq) == pytest.approx(1 - 2 / math.e, rel=1e-14)
    z = np.linspace(0.0, 20.0, 41)
    for eps in (1e-7, 1e-8, 2e-9):
        for sign in (1, -1):
            near = eq.replace(phi_bar=eq.phi_bar * (1 + sign * eps))
            np.testing.assert_allclose(an.f_z_cdf(z, near), an.f_z_cdf(z, eq), atol=1e-6)


def test_f_z_empirical(baseline):
    rng = np.random.default_rng(1)
    n = 200_000
    z = np.sort(baseline.p_c * rng.exponential(baseline.mu_cr, n) + rng.exponential(baseline.phi_bar, n))
    assert np.max(np.abs(an.f_z_cdf(z, baseline) - np.arange(1, n + 1) / n)) < 1.628 / math.sqrt(n)


def test_xi2_limits(baseline):
    assert an.xi2(50.0, 0.0, baseline) == 0.0
    assert an.xi2(50.0, 3.0, baseline.replace(s=1e-300)) == pytest.approx(0.0, abs=1e-290)


@pytest.mark.parametrize("seed", range(5))
def test_xi2_matches_quadrature(seed):
    rng = np.random.default_rng(seed)
    p = perturbed(rng)
    g, h = rng.exponential(p.mu_cb), rng.exponential(p.mu_cd)
    assert an.xi2(g, h, p) == pytest.approx(oracles.xi2(g, h, p), rel=1e-9)


def test_xi2_relative_accuracy_at_small_h(baseline):
    # the outage is O(h) as h -> 0; it must not be lost to 1 - (1 - O(h))
    p = baseline
    s, a, b = p.s, (1 - p.alpha) * p.mu_rd, p.mu_rb * p.xi * p.s
    g = mp.mpf(30.0)
    c = p.p_c * s / (p.p_r_max * p.mu_rd)
    w = (1 - p.alpha) * p.p_c * g / (p.p_r_max * p.mu_rb * p.xi)
    for h in (1e-3, 1e-9, 1e-15):
        h_mp = mp.mpf(h)
        ref = 1 - mp.exp(-c * h_mp) * (1 - mp.exp(-w) + mp.exp(-w) * a * g / (a * g + b * h_mp))
        assert an.xi2(30.0, h, p) == pytest.approx(float(ref), rel=1e-12)


def test_xi2_matches_monte_carlo(baseline):
    rng = np.random.default_rng(11)
    mean, se = oracles.sample_xi2_mc(40.0, 2.0, baseline, 10_000_000, rng)
    assert abs(an.xi2(40.0, 2.0, baseline) - mean) < 3 * se


def test_xi_e2e():
    assert an.xi_e2e(0.0, 0.0) == 0.0
    assert an.xi_e2e(1.0, 0.3) == 1.0
    assert an.xi_e2e(0.1, 0.2) == pytest.approx(0.28)


# -- averaged building blocks ------------------------------------------------

def test_normalizations(baseline):
    g = np.random.default_rng(2).exponential(baseline.mu_cb, 50)
    for duplex in (FULL, HALF):
        np.testing.assert_allclose(an.phi1(0, g, baseline, duplex), 1.0, atol=1e-10)
        np.testing.assert_allclose(an.phi2(0, g, baseline, duplex), 1.0, atol=1e-10)
        np.testing.assert_allclose(an.vartheta(0, g, baseline, duplex), 1.0, atol=1e-12)
        np.testing.assert_allclose(an.theta_fn(0, 0, g, baseline, duplex), 1.0, atol=1e-12)


def test_vartheta_cap_limits(baseline):
    # no CUE-BS gain: no transmit power, never a success
    assert an.vartheta(2, 0.0, baseline) == 0.0
    # huge CUE-BS gain: the cap always binds
    cap = 1 - an.xi1(baseline.p_s_max, baseline)
    assert an.vartheta(3, 1e12, baseline) == pytest.approx(cap**3, rel=1e-9)


def test_theta_closed_values(baseline):
    expected = 1 / (1 + baseline.mu_cd * baseline.p_c * baseline.s / (baseline.p_r_max * baseline.mu_rd))
    assert an.theta_fn(1, 0, 30.0, baseline) == pytest.approx(expected, rel=1e-14)
    assert an.theta_fn(2, 1, 0.0, baseline) == 0.0
    with pytest.raises(ValueError):
        an.theta_fn(1, 2, 1.0, baseline)


@pytest.mark.parametrize("seed", range(6))
def test_building_blocks_match_quadrature(seed):
    rng = np.random.default_rng(100 + seed)
    p = perturbed(rng)
    g = float(rng.exponential(p.mu_cb))
    duplex = (FULL, HALF)[seed % 2]
    for k in (1, 2, 4):
        assert an.vartheta(k, g, p, duplex) == pytest.approx(oracles.vartheta(k, g, p, duplex),
                                                             rel=1e-7)
    for n in (1, 3):
        assert an.phi1(n, g, p, duplex) == pytest.approx(oracles.phi1(n, g, p, duplex), rel=1e-7)
        assert an.phi2(n, g, p, duplex) == pytest.approx(oracles.phi2(n, g, p, duplex), rel=1e-7)
    for pw, q in ((1, 1), (3, 2), (4, 4)):
        assert an.theta_fn(pw, q, g, p, duplex) == pytest.approx(
            oracles.theta(pw, q, g, p, duplex), rel=1e-7)


def test_phi1_high_precision(baseline):
    # 50-digit quadrature of E_l[Xi1^4] on the baseline scenario
    mp.mp.dps = 50
    g = mp.mpf(100)
    p = baseline
    s = mp.mpf(p.s)

    def f(l):
        p_s = min(mp.mpf(p.alpha) * p.p_c * g / (p.xi * l), mp.mpf(p.p_s_max))
        x1 = p.p_c * mp.mpf(p.mu_cr) * s / (p_s * p.mu_sr)
        x2 = mp.mpf(p.phi_bar) * s / (p_s * p.mu_sr)
        return (1 - 1 / ((1 + x1) * (1 + x2))) ** 4 * mp.exp(-l / p.mu_sb) / p.mu_sb

    u = p.alpha * p.p_c * g / (p.p_s_max * p.xi)
    ref = mp.quad(f, [0, u, 2 * u, 10 * u, mp.inf])
    assert an.phi1(4, 100.0, p) == pytest.approx(float(ref), rel=1e-9)


def test_tiny_phi_values_keep_relative_accuracy():
    # E[Xi^3] near 1e-10: the alternating sum alone loses about 1e-5 here
    rng = np.random.default_rng(7)
    for _ in range(13):
        p = perturbed(rng)
        g = float(rng.exponential(p.mu_cb))
        rng.exponential(p.mu_cd)
    assert an.phi2(3, g, p) < 1e-9
    assert an.phi2(3, g, p) == pytest.approx(oracles.phi2(3, g, p), rel=1e-8)
    assert an.phi1(3, g, p) == pytest.approx(oracles.phi1(3, g, p), rel=1e-8)


def test_alternating_fallback_only_when_ill_conditioned(baseline, monkeypatch):
    calls = []
    monkeypatch.setattr(an, "_phi1_direct", lambda *a: calls.append(a) or 0.5)
    an.phi1(1, np.array([10.0, 100.0]), baseline)
    assert calls == []


@given(scenarios(), st.floats(0.0, 1e4))
@settings(max_examples=30)
def test_phi2_non_increasing_in_n(p, g):
    vals = an.phi2(p.n_relays + 2, g, p)
    seq = [an.phi2(n, g, p) for n in range(p.n_relays + 3)]
    assert vals == seq[-1]
    assert all(b <= a + 1e-12 for a, b in zip(seq, seq[1:]))


@given(scenarios(), st.floats(0.0, 1e4))
@settings(max_examples=30)
def test_integrands_factorize(p, g):
    # given g the two hops are independent: E[(1-Xi)^n] = vartheta(n) * eta(n)
    big_n = p.n_relays
    garr = np.array([g])
    eta = an._eta_all(big_n, garr, p, FULL)
    vt = an._vartheta_all(big_n, garr, p, FULL)
    np.testing.assert_allclose(an.bulk_integrand(garr, p)[:, 0], (vt * eta)[:, 0],
                               rtol=1e-9, atol=1e-13)
    psi = sum(math.comb(big_n, j) * (-1) ** j * vt[j, 0] * eta[j, 0] for j in range(big_n + 1))
    assert an.ps_integrand(garr, p)[0] == pytest.approx(psi, rel=1e-7, abs=1e-12)


# -- outage probabilities ----------------------------------------------------

def test_bulk_equals_ps_single_relay():
    rng = np.random.default_rng(5)
    for _ in range(5):
        p = perturbed(rng, n_relays=1, n_subcarriers=int(rng.integers(1, 5)))
        for mode in PowerControlMode:
            for duplex in (FULL, HALF):
                assert an.analytic_outage(p, mode, duplex, BULK) == pytest.approx(
                    an.analytic_outage(p, mode, duplex, PS), rel=1e-9, abs=1e-15)


def test_static_is_dynamic_with_point_mass(baseline):
    point = lambda fn, params: fn(np.array([params.kappa]))[..., 0]
    for n, k in ((1, 1), (2, 3), (4, 4)):
        p = baseline.replace(n_relays=n, n_subcarriers=k)
        assert an.outage_bulk_dynamic(p, average=point) == pytest.approx(
            an.outage_bulk_static(p), rel=1e-10, abs=1e-16)
        assert an.outage_ps_dynamic(p, average=point) == pytest.approx(
            an.outage_ps_static(p), rel=1e-10, abs=1e-16)


def test_static_single_relay_single_subcarrier(baseline):
    p = baseline.replace(n_relays=1, n_subcarriers=1)
    x1, x2 = an.phi1(1, p.kappa, p), an.phi2(1, p.kappa, p)
    assert an.outage_bulk_static(p) == pytest.approx(1 - (1 - x1) * (1 - x2), rel=1e-12)


def test_half_duplex_is_vanishing_si_limit(baseline):
    p = baseline.replace(n_relays=2, n_subcarriers=2)
    q = p.replace(phi_bar=1e-30, s=p.s * (p.s + 2))
    for scheme in (BULK, PS):
        for mode in PowerControlMode:
            assert an.outage_half_analytic(p, scheme, mode) == pytest.approx(
                an.analytic_outage(q, mode, FULL, scheme), abs=1e-6)


def test_ideal_full_is_half_at_raised_threshold(baseline):
    p = baseline.replace(n_relays=3, n_subcarriers=2)
    q = p.replace(s=p.s * (p.s + 2))
    for scheme in (BULK, PS):
        assert an.analytic_outage(p, DYN, HALF, scheme) == pytest.approx(
            an.analytic_outage(q, DYN, IDEAL, scheme), rel=1e-12)


def test_tiny_threshold(baseline):
    p = baseline.replace(s=1e-12, n_relays=2, n_subcarriers=2)
    for mode in PowerControlMode:
        for scheme in (BULK, PS):
            assert an.analytic_outage(p, mode, FULL, scheme) < 1e-8


def test_relay_cap(baseline):
    with pytest.raises(an.NumericalInstabilityError):
        an.outage_bulk_static(baseline.replace(n_relays=13))
    assert 0 <= an.outage_ps_static(baseline.replace(n_relays=12, n_subcarriers=2)) <= 1


def test_against_monte_carlo(baseline):
    p = baseline.replace(n_relays=2, n_subcarriers=2)
    cfgs = [(m, d, s) for m in PowerControlMode for d in (FULL, HALF) for s in (BULK, PS)]
    mc = estimate_outages(p, cfgs, 2_000_000, seed=21)
    for cfg in cfgs:
        assert mc[cfg].contains(an.analytic_outage(p, *cfg))


@given(scenarios(max_relays=4, max_subcarriers=4))
@settings(max_examples=25)
def test_static_outage_orderings(p):
    out = {sch: an.analytic_outage(p, STA, FULL, sch) for sch in SelectionScheme}
    tol = 1e-9
    assert all(0 <= v <= 1 for v in out.values())
    assert out[PS] <= out[BULK] + tol <= out[SelectionScheme.RANDOM] + 2 * tol
    bigger_s = an.analytic_outage(p.replace(s=p.s * 1.5), STA, FULL, PS)
    assert bigger_s >= out[PS] - tol
    more_k = an.analytic_outage(p.replace(n_subcarriers=p.n_subcarriers + 1), STA, FULL, BULK)
    assert more_k >= out[BULK] - tol
    more_n = an.analytic_outage(p.replace(n_relays=p.n_relays + 1), STA, FULL, BULK)
    assert more_n <= out[BULK] + tol


def test_dynamic_monotone_on_grid(baseline):
    base = baseline.replace(n_relays=2, n_subcarriers=2)
    s_vals = np.geomspace(0.1, 50, 8)
    for scheme in (BULK, PS):
        curve = [an.analytic_outage(base.replace(s=float(s)), DYN, FULL, scheme) for s in s_vals]
        assert all(b >= a for a, b in zip(curve, curve[1:]))
        by_n = [an.analytic_outage(base.replace(n_relays=n), DYN, FULL, scheme) for n in (1, 2, 3)]
        assert by_n[0] >= by_n[1] >= by_n[2]
        by_k = [an.analytic_outage(base.replace(n_subcarriers=k), DYN, FULL, scheme)
                for k in (1, 2, 4)]
        assert by_k[0] <= by_k[1] <= by_k[2]


def test_equal_interference_means_degenerate_roots(baseline):
    # phi_bar == P_C mu_CR merges the two chi roots
    p = baseline.replace(phi_bar=baseline.p_c * baseline.mu_cr, n_relays=3, n_subcarriers=2)
    near = p.replace(phi_bar=p.phi_bar * (1 + 1e-7))
    for mode in PowerControlMode:
        assert an.analytic_outage(p, mode, FULL, BULK) == pytest.approx(
            an.analytic_outage(near, mode, FULL, BULK), rel=1e-5)

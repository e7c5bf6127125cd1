"""Special-function substrate for the analytic outage expressions.

Everything here works on integer-order exponential integrals
``E_n(x)``, since the incomplete gamma function is only ever needed at
non-positive integer-plus-one orders: ``Gamma(1 - n, x) = x**(1 - n) E_n(x)``.
Values are carried in scaled form ``e**x E_n(x)`` so that arguments far
beyond the double-precision exponent range stay finite.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

EULER_GAMMA = 0.57721566490153286061
# a few ulps: the Lentz ratio can round to 1 +- 2**-52 indefinitely for huge x
_EPS = 4.0 * np.finfo(float).eps
_FPMIN = 1e-300
_MAX_CF_ITER = 10_000

# roots closer than this (relative) are one repeated root
ROOT_MERGE_RTOL = 1e-9
# two-root chi switches to the positive binomial series above this ratio
_SERIES_RATE = 0.7

Composition = tuple[int, ...]


def compositions(n: int, t: int) -> Iterator[Composition]:
    """Yield every ordered ``t``-tuple of non-negative ints summing to ``n``.

    Stars and bars order: the tuple with all mass in the last slot comes
    first, ``(n, 0, ..., 0)`` last.
    """
    if n < 0 or t < 1:
        raise ValueError(f"need n >= 0 and t >= 1, got n={n}, t={t}")
    for bars in itertools.combinations(range(n + t - 1), t - 1):
        prev = -1
        parts = []
        for b in bars:
            parts.append(b - prev - 1)
            prev = b
        parts.append(n + t - 2 - prev)
        yield tuple(parts)


def multinomial(parts: Sequence[int]) -> int:
    out = math.factorial(sum(parts))
    for p in parts:
        out //= math.factorial(p)
    return out


def neumaier_sum(terms: Sequence[np.ndarray | float]) -> np.ndarray:
    """Elementwise compensated sum of a sequence of equally shaped arrays."""
    it = iter(terms)
    total = np.array(next(it), dtype=float, copy=True)
    comp = np.zeros_like(total)
    for term in it:
        term = np.asarray(term, dtype=float)
        t = total + term
        big = np.abs(total) >= np.abs(term)
        comp += np.where(big, (total - t) + term, (term - t) + total)
        total = t
    return total + comp


# ---------------------------------------------------------------------------
# exponential integrals


def _expn_cf(n: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Modified Lentz continued fraction for e**x E_n(x); valid for x > 1."""
    b = x + n
    c = np.full_like(x, 1.0 / _FPMIN)
    d = 1.0 / b
    h = d.copy()
    active = np.ones(x.shape, dtype=bool)
    for i in range(1, _MAX_CF_ITER):
        a = -i * (n - 1.0 + i)
        b = b + 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h = np.where(active, h * delta, h)
        active &= np.abs(delta - 1.0) > _EPS
        if not active.any():
            return h
    raise ArithmeticError("continued fraction for E_n did not converge")


def _e1_series(x: np.ndarray) -> np.ndarray:
    """E_1(x) by its power series; accurate for 0 < x <= 1."""
    total = np.zeros_like(x)
    term = np.ones_like(x)
    for k in range(1, 60):
        term = term * (-x) / k
        total += term / k
    return -EULER_GAMMA - np.log(x) - total


def scaled_expn(n, x) -> np.ndarray:
    """``e**x * E_n(x)`` for integer ``n >= 0`` and ``x > 0`` (broadcasting).

    For ``x <= 1`` the value is built from the E_1 series with the forward
    recurrence ``E_{m+1} = (e**-x - x E_m) / m``; the recurrence only
    shrinks errors there. For ``x > 1`` a continued fraction is used.
    """
    n, x = np.broadcast_arrays(np.asarray(n, dtype=np.int64), np.asarray(x, dtype=float))
    if np.any(x <= 0):
        raise ValueError("scaled_expn requires x > 0")
    if np.any(n < 0):
        raise ValueError("scaled_expn requires n >= 0")
    out = np.empty(x.shape, dtype=float)

    zero = n == 0
    out[zero] = 1.0 / x[zero]

    big = (x > 1.0) & ~zero
    if big.any():
        out[big] = _expn_cf(n[big].astype(float), x[big])

    small = (x <= 1.0) & ~zero
    if small.any():
        xs = x[small]
        ns = n[small]
        ex = np.exp(xs)
        cur = _e1_series(xs) * ex
        res = np.empty_like(xs)
        res[ns == 1] = cur[ns == 1]
        for m in range(1, int(ns.max())):
            cur = (1.0 - xs * cur) / m
            res[ns == m + 1] = cur[ns == m + 1]
        out[small] = res
    return out


def log_upper_incomplete_gamma(a: int, x: float) -> float:
    """``log Gamma(a, x)`` for integer ``a <= 1`` and ``x > 0``.

    ``Gamma(a, x)`` is strictly positive here, so the sign is always +1 and
    only the log-magnitude is returned.
    """
    if a > 1 or a != int(a):
        raise ValueError(f"order must be an integer <= 1, got {a}")
    if not x > 0:
        raise ValueError(f"x must be positive, got {x}")
    n = 1 - int(a)
    return (1 - n) * math.log(x) + math.log(float(scaled_expn(n, x))) - x


def upper_incomplete_gamma(a: int, x: float) -> float:
    """Upper incomplete gamma ``Gamma(a, x)`` at integer order ``a <= 1``.

    ``Gamma(1, x) = e**-x`` and ``Gamma(0, x) = E_1(x)``; lower orders follow
    the downward recurrence ``Gamma(a, x) = (Gamma(a+1, x) - x**a e**-x) / a``
    while ``x <= 1``, and the E_n continued fraction beyond that, where the
    recurrence would cancel.
    """
    if a > 1 or a != int(a):
        raise ValueError(f"order must be an integer <= 1, got {a}")
    if not x > 0:
        raise ValueError(f"x must be positive, got {x}")
    a = int(a)
    if a == 1:
        return math.exp(-x)
    if x <= 1.0:
        val = float(_e1_series(np.array([x]))[0])
        for order in range(-1, a - 1, -1):
            val = (val - x**order * math.exp(-x)) / order
        return val
    return math.exp(log_upper_incomplete_gamma(a, x))


# ---------------------------------------------------------------------------
# partial fractions


def merge_roots(roots: Sequence[float], multiplicities: Sequence[int],
                rtol: float = ROOT_MERGE_RTOL) -> tuple[tuple[float, ...], tuple[int, ...]]:
    """Fold roots within ``rtol`` of each other into one repeated root."""
    order = sorted(range(len(roots)), key=lambda i: roots[i])
    out_r: list[float] = []
    out_m: list[int] = []
    for i in order:
        r, m = float(roots[i]), int(multiplicities[i])
        if m == 0:
            continue
        if out_r and abs(r - out_r[-1]) <= rtol * max(abs(r), abs(out_r[-1])):
            out_m[-1] += m
        else:
            out_r.append(r)
            out_m.append(m)
    return tuple(out_r), tuple(out_m)


@dataclass(frozen=True)
class PartialFractionExpansion:
    """``1 / prod (x + a_i)**m_i == sum_i sum_q coeffs[i][q-1] / (x + a_i)**q``."""

    roots: tuple[float, ...]
    multiplicities: tuple[int, ...]
    coeffs: tuple[tuple[float, ...], ...]

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        total = np.zeros_like(x)
        for a, row in zip(self.roots, self.coeffs):
            for q, c in enumerate(row, start=1):
                total = total + c / (x + a) ** q
        return total


def partial_fractions(roots: Sequence[float], multiplicities: Sequence[int] | int = 1
                      ) -> PartialFractionExpansion:
    """Partial-fraction coefficients of ``1 / prod (x + a_i)**m_i``.

    Uses the Taylor recursion for ``g(t) = prod_{j != i} (t + d_j)**-m_j``
    around each pole: with ``g'/g = sum_k h_k t**k``, the coefficients obey
    ``(k + 1) c_{k+1} = sum_{l <= k} h_l c_{k-l}`` and ``A(q, i) = c_{m_i - q}``.
    """
    roots = [float(r) for r in roots]
    if isinstance(multiplicities, int):
        mults = [multiplicities] * len(roots)
    else:
        mults = [int(m) for m in multiplicities]
    if len(mults) != len(roots):
        raise ValueError("roots and multiplicities differ in length")
    if any(r <= 0 for r in roots):
        raise ValueError("partial_fractions requires positive roots")
    for i, j in itertools.combinations(range(len(roots)), 2):
        if abs(roots[i] - roots[j]) <= ROOT_MERGE_RTOL * max(roots[i], roots[j]):
            raise ValueError(
                f"roots {roots[i]!r} and {roots[j]!r} coincide; merge them first")

    coeffs = []
    for i, (ri, mi) in enumerate(zip(roots, mults)):
        others = [(rj - ri, mj) for j, (rj, mj) in enumerate(zip(roots, mults)) if j != i]
        c = [math.prod(d ** -m for d, m in others)]
        h = [sum(-m * (-1) ** k / d ** (k + 1) for d, m in others) for k in range(mi)]
        for k in range(mi - 1):
            c.append(math.fsum(h[l] * c[k - l] for l in range(k + 1)) / (k + 1))
        coeffs.append(tuple(c[mi - q] for q in range(1, mi + 1)))
    return PartialFractionExpansion(tuple(roots), tuple(mults), tuple(coeffs))


# ---------------------------------------------------------------------------
# chi


def _tail_integral(n, c, beta):
    """``e**(beta v) int_v^inf e**(-beta t) (t + r)**-n dt`` with ``c = v + r``."""
    return c ** (1.0 - n) * scaled_expn(n, beta * c)


def _series_terms(delta: float, m2: int) -> int:
    # smallest J with C(m2+J-1, J) delta**J < 1e-18
    j, term = 0, 1.0
    while True:
        j += 1
        term *= delta * (m2 + j - 1) / j
        if term < 1e-18 and j > 2:
            return j


def normalized_chi(mults: Sequence[int], ratios: Sequence[float], v: float,
                   beta) -> np.ndarray:
    """``e**(beta v) int_v^inf e**(-beta t) / prod (t + r_i)**m_i dt``.

    ``ratios`` are the roots rescaled so the largest is 1; ``beta`` may be
    an array. With two roots, ``(t + rho)**-m`` is expanded about ``t + 1``
    into all-positive terms whenever that series contracts by at least
    ``_SERIES_RATE`` per term on ``[v, inf)``. This avoids the cancellation
    partial fractions suffer for close roots or a far lower limit.
    Everything else goes through partial fractions.
    """
    beta = np.asarray(beta, dtype=float)
    ratios, mults = merge_roots(ratios, mults)
    if not ratios:
        return 1.0 / beta
    if len(ratios) == 2 and (1.0 - ratios[0] / ratios[1]) <= _SERIES_RATE * (v / ratios[1] + 1.0):
        rho, top = ratios[0] / ratios[1], ratios[1]
        m_small, m_top = mults
        # rescale so the larger root is exactly 1
        delta = 1.0 - rho
        total_m = m_small + m_top
        nterms = _series_terms(delta / (v / top + 1.0), m_small)
        js = np.arange(nterms + 1)
        log_w = (np.array([math.lgamma(m_small + j) - math.lgamma(j + 1) - math.lgamma(m_small)
                           for j in js]) + js * (math.log(delta) if delta > 0 else 0.0))
        w = np.exp(log_w)
        if delta == 0:
            w[1:] = 0.0
        c = v / top + 1.0
        orders = (total_m + js)[:, None]
        vals = _tail_integral(orders, c, beta[None, ...].reshape(1, -1) * top)
        out = (w[:, None] * vals).sum(axis=0).reshape(beta.shape)
        return out * top ** (1.0 - total_m)
    pfe = partial_fractions(ratios, mults)
    terms = []
    for r, row in zip(pfe.roots, pfe.coeffs):
        for q, a in enumerate(row, start=1):
            terms.append(a * _tail_integral(q, v + r, beta))
    return neumaier_sum(terms)


def weighted_chi(p: int, a: Sequence[float], b, u: float) -> np.ndarray:
    """``e**(b u) prod(a_i**p) * chi_u^(p)(a, b)``.

    This is ``int_u^inf e**(-b (x - u)) prod (a_i / (x + a_i))**p dx`` with
    every factor of the integrand at most one, so it never overflows.
    """
    b = np.asarray(b, dtype=float)
    a = [float(ai) for ai in a]
    if p == 0 or not a:
        return 1.0 / b
    top = max(a)
    ratios = [ai / top for ai in a]
    core = normalized_chi([p] * len(a), ratios, u / top, b * top)
    return top * math.prod(r**p for r in ratios) * core


def chi(p: int, a: Sequence[float], b: float, u: float) -> float:
    """``int_u^inf e**(-b x) / prod (x + a_i)**p dx``.

    ``p = 0`` gives ``e**(-b u) / b``. For ``p > 0`` the partial-fraction
    sum of ``A(q, i) e**(a_i b) Gamma(1 - q, b (a_i + u))`` is assembled in
    log space, so ``a_i b`` far above 700 is fine.
    """
    if p < 0:
        raise ValueError("p must be non-negative")
    if any(ai <= 0 for ai in a):
        raise ValueError("roots a_i must be positive")
    if p == 0:
        return math.exp(-b * u) / b
    w = float(weighted_chi(p, a, b, u))
    return math.exp(math.log(w) - b * u - p * sum(math.log(ai) for ai in a))

"""Deterministic constants: c1, exit-hit masses and the closed-form moments.

Everything here is computed with a local adaptive Gauss-Kronrod rule and
bisection, so the Monte Carlo targets do not depend on scipy.  The integrand

    1 / sqrt((8/3) u^3 + c^2)

is reduced by ``u = (3 c^2 / 8)^(1/3) t`` to the fixed profile
``1 / sqrt(1 + t^3)``; beyond ``t = 1`` the tail is mapped by ``t = v^-2`` to
the smooth integrand ``2 / sqrt(1 + v^6)`` on ``[0, 1]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "AnalyticConstants",
    "ConvergenceError",
    "adaptive_quad",
    "bisect",
    "profile_integral",
    "implicit_integral",
    "solve_c1",
    "hitting_mass",
    "exit_hit_prob",
    "mu_mean",
    "occupation_before_hit",
    "exit_mass_expectation",
]

C_BRACKET = (1e-6, 1e3)

# 7-point Gauss / 15-point Kronrod nodes and weights on [-1, 1]
_XK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XK[:-1], _XK[::-1]])
_WEIGHTS_K = np.concatenate([_WK[:-1], _WK[::-1]])
_WEIGHTS_G = np.zeros(15)
_WEIGHTS_G[[1, 3, 5, 7, 9, 11, 13]] = np.concatenate([_WG[:-1], _WG[::-1]])


class ConvergenceError(RuntimeError):
    """A quadrature or root-finding routine failed to reach its tolerance."""


@dataclass(frozen=True)
class AnalyticConstants:
    c1: float
    quadrature_tol: float
    root_tol: float

    @property
    def residual(self) -> float:
        """Defining-identity residual, evaluated with this module's quadrature."""
        return abs(implicit_integral(math.inf, self.c1, self.quadrature_tol) - 1.0)


def _gk15(f, a, b):
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    fx = f(mid + half * _NODES)
    k = half * float(fx @ _WEIGHTS_K)
    g = half * float(fx @ _WEIGHTS_G)
    return k, abs(k - g)


def adaptive_quad(f, a, b, tol=1e-12, max_intervals=2000):
    """Integrate a vectorized ``f`` over the finite interval [a, b].

    Global adaptive G7-K15: the interval with the largest error estimate is
    split until the summed estimate is below ``tol`` (absolute).
    """
    if a == b:
        return 0.0
    k, e = _gk15(f, a, b)
    pieces = [(e, a, b, k)]
    total, err = k, e
    while err > tol:
        if len(pieces) >= max_intervals:
            raise ConvergenceError(f"quadrature did not reach tol={tol:g} (err={err:g})")
        i = max(range(len(pieces)), key=lambda j: pieces[j][0])
        e0, lo, hi, k0 = pieces.pop(i)
        mid = 0.5 * (lo + hi)
        k1, e1 = _gk15(f, lo, mid)
        k2, e2 = _gk15(f, mid, hi)
        pieces += [(e1, lo, mid, k1), (e2, mid, hi, k2)]
        total += k1 + k2 - k0
        err += e1 + e2 - e0
    # re-sum to shed the running-update rounding
    return math.fsum(p[3] for p in pieces)


def bisect(f, lo, hi, tol, max_iter=400):
    """Root of a monotone ``f`` on [lo, hi]; stops when the bracket is < tol."""
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise ConvergenceError(f"no sign change on [{lo:g}, {hi:g}]")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if hi - lo <= tol or mid in (lo, hi):
            return mid
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    raise ConvergenceError("bisection exceeded max_iter")


def _head(t):
    return 1.0 / np.sqrt(1.0 + t**3)


def _tail(v):
    return 2.0 / np.sqrt(1.0 + v**6)


@lru_cache(maxsize=64)
def _profile_total(tol):
    return adaptive_quad(_head, 0.0, 1.0, tol / 2) + adaptive_quad(_tail, 0.0, 1.0, tol / 2)


def profile_integral(y, tol=1e-13):
    """``P(y) = int_0^y dt / sqrt(1 + t^3)``, including ``y = inf``."""
    if y < 0:
        raise ValueError("upper limit must be >= 0")
    if y <= 1.0:
        return adaptive_quad(_head, 0.0, y, tol)
    if math.isinf(y):
        return _profile_total(tol)
    # int_1^y dt/sqrt(1+t^3) = int_{y^-1/2}^1 2 dv / sqrt(1+v^6)
    return adaptive_quad(_head, 0.0, 1.0, tol / 2) + adaptive_quad(_tail, y**-0.5, 1.0, tol / 2)


def implicit_integral(x, c, tol=1e-13):
    """``int_0^x du / sqrt((8/3) u^3 + c^2)`` for ``c > 0``."""
    if c <= 0:
        raise ValueError("c must be positive")
    scale = (3.0 * c * c / 8.0) ** (1.0 / 3.0)
    return scale / c * profile_integral(x / scale if not math.isinf(x) else math.inf, tol)


def solve_c1(tol=1e-10, quad_tol=1e-13) -> AnalyticConstants:
    """Solve ``int_0^inf du / sqrt((8/3)u^3 + c^2) = 1`` for ``c`` by bisection.

    The left side is strictly decreasing in ``c``.  ``tol`` bounds the defining
    identity residual; the bracket is narrowed until that holds.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    lo, hi = C_BRACKET

    def g(c):
        return implicit_integral(math.inf, c, quad_tol) - 1.0

    if not (g(lo) > 0 > g(hi)):
        raise ConvergenceError(f"c1 is not bracketed by {C_BRACKET}")
    # |g'(c)| = 1/(3c) near the root, so an absolute bracket of tol keeps the
    # residual below tol for any root above 1/3
    c = bisect(g, lo, hi, tol)
    if abs(g(c)) > tol:
        raise ConvergenceError(f"c1 residual {abs(g(c)):g} exceeds tol={tol:g}")
    return AnalyticConstants(c1=c, quadrature_tol=quad_tol, root_tol=tol)


@lru_cache(maxsize=None)
def _c1_default():
    return solve_c1().c1


def c1() -> float:
    """Cached c1 at the default tolerances."""
    return _c1_default()


def hitting_mass(h):
    """Excursion-measure mass of paths whose labels reach ``h``: 3 / (2 h^2)."""
    if h == 0:
        raise ValueError("the hitting mass is undefined at h = 0")
    return 3.0 / (2.0 * h * h)


def exit_hit_prob(eps, delta, tol=1e-12):
    """Mass of excursions whose exit measure from (-delta, eps) charges eps.

    Solves ``int_0^a du / sqrt((8/3)u^3 + (eps+delta)^-6 c1^2) = delta`` for ``a``.
    """
    if eps <= 0 or delta <= 0:
        raise ValueError("eps and delta must be positive")
    c = c1() / (eps + delta) ** 3

    def g(a):
        return implicit_integral(a, c) - delta

    # a ~ delta * c for small delta; widen geometrically until bracketed
    lo, hi = 0.0, max(delta * c, 1e-300)
    while g(hi) < 0:
        lo, hi = hi, hi * 4.0
        if hi > 1e300:
            raise ConvergenceError("exit mass not bracketed")
    return bisect(g, lo, hi, tol * max(hi, 1e-300))


def mu_mean(c=None):
    """Mean fresh-upcrossing count of an excursion that hits eps: 2 c1 / 3."""
    return 2.0 * (c1() if c is None else c) / 3.0


def occupation_before_hit(h, eps):
    """Expected time a Brownian motion from 0 spends in [h-eps, h] before hitting h."""
    if not 0 < eps <= h:
        raise ValueError("need 0 < eps <= h")
    return eps * eps


def exit_mass_expectation(eps, delta, r):
    """Expected exit mass at -delta from (-delta, eps) for initial mass r at 0."""
    if eps <= 0 or delta <= 0 or r <= 0:
        raise ValueError("eps, delta and r must be positive")
    return r * eps / (eps + delta)

"""Interpolation threshold: the separability phase transition.

For n samples and p = kappa * n trained features, the training data becomes
linearly separable (with probability tending to one) exactly when kappa
exceeds the root kappa* of

    g(kappa) = kappa,      g(kappa) := min_t E (H + t V)_-^2,

where (x)_- = min(x, 0), H is standard normal, and V carries the data model
at signal strength s(kappa).  Integrating the independent H coordinate first
collapses the objective to a one-dimensional average of the Gaussian
truncated second moment:

    E (H + t V)_-^2 = E_V [ tsm(t V) ],        tsm(m) = E (N(m,1))_-^2,

and when V itself is Gaussian (the mixture model, V ~ N(s,1)) the whole
expression closes to (1 + t^2) tsm(t s / sqrt(1 + t^2)).

g is strictly decreasing in kappa with g(0+) = 1/2, so the fixed point is
unique and lies in (0, 1/2]; it is found by bisection.  The t-minimization
uses golden-section search on an auto-expanded bracket: the objective is
convex and coercive whenever s > 0.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import BracketFailure, NoRoot
from .feature_map import DataModelSpec, FeatureMap, noise_for
from .gaussian_core import (
    NoiseModelV,
    QuadratureSpec,
    expect_HV,
    truncated_second_moment,
    v_nodes,
)

__all__ = [
    "PhaseResult",
    "threshold_objective",
    "threshold_objective_generic",
    "threshold_g",
    "solve_kappa_star",
]

_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class PhaseResult:
    """Solution of g(kappa) = kappa."""

    kappa_star: float
    g_at_star: float
    bracket: tuple
    iterations: int


def golden_section(f, lo: float, hi: float, tol: float = 1e-10,
                   max_iter: int = 200):
    """Minimize a unimodal f on [lo, hi]; returns (argmin, min value)."""
    a, b = float(lo), float(hi)
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a < tol * (1.0 + abs(a) + abs(b)):
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def threshold_objective(t: float, noise: NoiseModelV, nodes: int = 96) -> float:
    """E (H + t V)_-^2 with the H coordinate integrated in closed form.

    Mixture model: (1 + t^2) tsm(t s / sqrt(1 + t^2)) exactly.  Logistic
    model: average of tsm(t v) over the discrete V measure.
    """
    t = float(t)
    if noise.model == "GmShifted":
        scale = 1.0 + t * t
        return float(scale * truncated_second_moment(t * noise.s / np.sqrt(scale)))
    v, w = v_nodes(noise, nodes)
    return float(truncated_second_moment(t * v) @ w)


def threshold_objective_generic(t: float, noise: NoiseModelV,
                                quad: QuadratureSpec = QuadratureSpec()) -> float:
    """Same objective through the generic expectation engine.

    Exists as an independent code path: it shares no reduction with
    threshold_objective, so agreement between the two validates both.
    """
    t = float(t)

    def f(h, v):
        return np.minimum(h + t * v, 0.0) ** 2

    return expect_HV(f, noise, quad)


def _minimize_threshold(noise: NoiseModelV, nodes: int = 96):
    """min_t of the threshold objective, with bracket auto-expansion."""

    def obj(t):
        return threshold_objective(t, noise, nodes)

    lo, hi = -1.0, 1.0
    flo, fhi = obj(lo), obj(hi)
    while obj(2.0 * hi) < fhi:
        hi *= 2.0
        fhi = obj(hi)
        if hi > 1e6:
            raise BracketFailure("threshold objective still decreasing at t=1e6")
    while obj(2.0 * lo) < flo:
        lo *= 2.0
        flo = obj(lo)
        if lo < -1e6:
            raise BracketFailure("threshold objective still decreasing at t=-1e6")
    # the expansion stops once obj(2x) >= obj(x); by convexity the minimizer
    # then lies within the doubled endpoints, not the tested ones
    return golden_section(obj, 2.0 * lo, 2.0 * hi)


def threshold_g(model: DataModelSpec, fmap: FeatureMap, kappa: float,
                nodes: int = 96) -> float:
    """The threshold function g(kappa) = min_t E (H + t V_{r,s(kappa)})_-^2."""
    noise = noise_for(model, fmap, kappa)
    return _minimize_threshold(noise, nodes)[1]


def solve_kappa_star(model: DataModelSpec, fmap: FeatureMap,
                     tol: float = 1e-10, residual_tol: float = 1e-8,
                     nodes: int = 96) -> PhaseResult:
    """Unique root of g(kappa) = kappa, by bisection on [1e-4, 1/2].

    h(kappa) = g(kappa) - kappa is strictly decreasing (g itself decreases),
    so a sign change on the bracket pins the root.  The degenerate map
    s == 0 has g == 1/2 and the root sits exactly at the upper endpoint;
    a vanishing endpoint residual is accepted as the root rather than
    raising NoRoot.
    """

    def h(kappa):
        return threshold_g(model, fmap, kappa, nodes) - kappa

    lo, hi = 1e-4, 0.5
    flo, fhi = h(lo), h(hi)
    if flo < 0.0:
        if abs(flo) <= residual_tol:
            return PhaseResult(lo, lo + flo, (lo, hi), 0)
        raise NoRoot(f"g - kappa already negative at kappa={lo}")
    if fhi >= 0.0:
        if abs(fhi) <= residual_tol:
            return PhaseResult(hi, hi + fhi, (lo, hi), 0)
        raise NoRoot("g - kappa does not change sign on [1e-4, 0.5]")
    iterations = 0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fmid = h(mid)
        iterations += 1
        if fmid == 0.0:
            lo = hi = mid
            break
        if fmid > 0.0:
            lo = mid
        else:
            hi = mid
    kappa_star = 0.5 * (lo + hi)
    g_star = threshold_g(model, fmap, kappa_star, nodes)
    if abs(g_star - kappa_star) > residual_tol:
        raise NoRoot(f"bisection residual {g_star - kappa_star:.2e} "
                     f"exceeds {residual_tol}")
    return PhaseResult(kappa_star, g_star, (lo, hi), iterations)


@lru_cache(maxsize=256)
def kappa_star_cached(model: DataModelSpec, fmap: FeatureMap) -> float:
    """Memoized kappa* for the solvers' regime checks."""
    return solve_kappa_star(model, fmap).kappa_star

"""Max-margin asymptotics above the interpolation threshold.

For kappa > kappa* the hard-margin SVM direction concentrates: its overlap
rho* with the true direction and the scaled inverse margin q* solve

    min_{-1 <= rho <= 1} eta(q, rho) = 0,

    eta(q, rho) := E ( rho V + sqrt(1 - rho^2) H - 1/q )_-^2  - (1 - rho^2) kappa.

Conditioning on V turns the expectation into an average of the Gaussian
truncated second moment with mean (rho v - 1/q) and variance 1 - rho^2; for
the mixture model (V ~ N(s,1)) the whole expression closes to

    eta(q, rho) = tsm(rho s - 1/q) - (1 - rho^2) kappa.

The profile eta_bar(q) = min_rho eta(q, rho) is strictly decreasing with
eta_bar(0+) = +inf, so its unique zero is found by bisection; the inner
minimization scans a dense rho grid and refines the best cell by
golden-section search (convexity in rho is not assumed).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BracketFailure, NotInRegime
from .feature_map import DataModelSpec, FeatureMap, best_risk, noise_for
from .gaussian_core import (
    NoiseModelV,
    QuadratureSpec,
    expect_HV,
    normal_tail,
    truncated_second_moment,
    v_nodes,
)
from .phase_transition import golden_section, kappa_star_cached

__all__ = [
    "SvmSolution",
    "eta",
    "eta_generic",
    "eta_min_over_rho",
    "solve_svm",
    "svm_predictions",
]


@dataclass(frozen=True)
class SvmSolution:
    """Root (q*, rho*) of the max-margin system at ratio kappa."""

    q_star: float
    rho_star: float
    eta_at_solution: float
    iterations: int
    kappa: float


def _eta_given_nodes(q, rho, kappa, v, w):
    om2 = 1.0 - rho * rho
    if om2 < 1e-14:
        return float(np.minimum(rho * v - 1.0 / q, 0.0) ** 2 @ w)
    m = (rho * v - 1.0 / q) / np.sqrt(om2)
    return om2 * (float(truncated_second_moment(m) @ w) - kappa)


def eta(q: float, rho: float, model: DataModelSpec, noise: NoiseModelV,
        kappa: float, nodes: int = 96) -> float:
    """The margin functional eta(q, rho) at ratio kappa.

    Mixture model: closed form tsm(rho s - 1/q) - (1 - rho^2) kappa.
    Logistic model: truncated-second-moment average over the V measure.
    """
    if model is not None:
        expected = "GmShifted" if model.kind == "GaussianMixture" else "LogisticGY"
        if noise.model != expected:
            raise ValueError("model kind and noise model disagree")
    if noise.model == "GmShifted":
        return float(truncated_second_moment(rho * noise.s - 1.0 / q)
                     - (1.0 - rho * rho) * kappa)
    v, w = v_nodes(noise, nodes)
    return _eta_given_nodes(q, rho, kappa, v, w)


def eta_generic(q: float, rho: float, noise: NoiseModelV, kappa: float,
                quad: QuadratureSpec = QuadratureSpec()) -> float:
    """eta through the generic expectation engine (independent code path)."""
    om = np.sqrt(max(1.0 - rho * rho, 0.0))

    def f(h, v):
        return np.minimum(rho * v + om * h - 1.0 / q, 0.0) ** 2

    return expect_HV(f, noise, quad) - (1.0 - rho * rho) * kappa


def eta_min_over_rho(q: float, noise: NoiseModelV, kappa: float,
                     grid: int = 201, nodes: int = 96):
    """(argmin, min) of rho -> eta(q, rho) by grid scan plus refinement."""
    v, w = v_nodes(noise, nodes)
    rhos = np.linspace(-0.999, 0.999, grid)
    om2 = 1.0 - rhos ** 2
    m = (np.outer(rhos, v) - 1.0 / q) / np.sqrt(om2)[:, None]
    vals = om2 * ((truncated_second_moment(m) @ w) - kappa)
    i = int(np.argmin(vals))
    lo = rhos[max(i - 1, 0)]
    hi = rhos[min(i + 1, grid - 1)]
    return golden_section(lambda t: _eta_given_nodes(q, t, kappa, v, w),
                          lo, hi, tol=1e-13)


def solve_svm(model: DataModelSpec, fmap: FeatureMap, kappa: float,
              margin: float = 1e-3, rel_tol: float = 1e-10,
              grid: int = 201, nodes: int = 96) -> SvmSolution:
    """Solve min_rho eta(q, rho) = 0 for q at ratio kappa > kappa*.

    Outer bisection on the strictly decreasing profile eta_bar(q), with the
    bracket expanded from [0.5, 2]: halving the lower edge until positive
    (guaranteed, eta_bar blows up as q -> 0) and doubling the upper edge
    until negative.  Raises NotInRegime below kappa* + margin and
    BracketFailure if eta_bar never turns negative by q = 1e8, which is the
    numerical signature of kappa <= kappa*.
    """
    kappa_star = kappa_star_cached(model, fmap)
    if kappa <= kappa_star + margin:
        raise NotInRegime(
            f"kappa={kappa} is not above kappa*={kappa_star:.6f} + {margin}")
    noise = noise_for(model, fmap, kappa)

    def profile(q):
        return eta_min_over_rho(q, noise, kappa, grid, nodes)[1]

    lo, hi = 0.5, 2.0
    flo = profile(lo)
    while flo < 0.0:
        lo *= 0.5
        flo = profile(lo)
        if lo < 1e-12:
            raise BracketFailure("eta profile negative even as q -> 0")
    fhi = profile(hi)
    while fhi > 0.0:
        hi *= 2.0
        if hi > 1e8:
            raise BracketFailure(
                "eta profile still positive at q=1e8; kappa <= kappa*?")
        fhi = profile(hi)

    iterations = 0
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        iterations += 1
        if profile(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    q_star = 0.5 * (lo + hi)
    rho_star, eta_star = eta_min_over_rho(q_star, noise, kappa, grid, nodes)
    return SvmSolution(q_star=q_star, rho_star=rho_star,
                       eta_at_solution=eta_star, iterations=iterations,
                       kappa=kappa)


def svm_predictions(sol: SvmSolution, model: DataModelSpec, s: float, r: float,
                    nodes: int = 96):
    """(risk, cosine, excess, normalized_margin) implied by a solution.

    cosine = rho* s / r; risk = P(rho* V + sqrt(1 - rho*^2) H < 0), closing
    to Q(rho* s) for the mixture model; normalized_margin = sqrt(kappa) q*,
    the limit of sqrt(kappa) times the inverse classifier margin.
    """
    rho = sol.rho_star
    cosine = rho * s / r
    if model.kind == "GaussianMixture":
        risk = float(normal_tail(rho * s))
    else:
        noise = NoiseModelV(model="LogisticGY", s=s, r=r)
        v, w = v_nodes(noise, nodes)
        om = np.sqrt(max(1.0 - rho * rho, 1e-300))
        risk = float(normal_tail(rho * v / om) @ w)
    excess = risk - best_risk(model)
    normalized_margin = float(np.sqrt(sol.kappa) * sol.q_star)
    return risk, cosine, excess, normalized_margin

"""Maximum-likelihood asymptotics below the interpolation threshold.

For kappa < kappa* the empirical logistic-loss minimizer beta_hat has a
bounded limit described by three scalars (mu, alpha, lambda): mu is the
component of beta_hat along the true direction, alpha the orthogonal norm,
and lambda the proximal smoothing parameter of the limiting optimality
conditions.  Writing P = prox_l(alpha H + mu V; lambda), the system is

    0        = E[ V l'(P) ]
    alpha^2 kappa = lambda^2 E[ l'(P)^2 ]
    kappa    = E[ lambda l''(P) / (1 + lambda l''(P)) ].

For the Gaussian-mixture model the pair (H, V) collapses to the single
Gaussian G = alpha H + mu V ~ N(mu s, alpha^2 + mu^2), and Stein's lemma
turns the first equation into the equivalent one-dimensional form

    E[ V l'(P) ] = s E[ l'(P) ] + mu E[ l''(P) / (1 + lambda l''(P)) ],

on which the solver also bases its mu-update (the reformulation keeps the
update well conditioned).  The solver is a damped Gauss-Seidel sweep:
lambda from the third equation by a warm-bracketed 1-D root solve, then mu
from the first, then alpha explicitly from the second, each step damped by
theta = 1/2.  Residual scales blow up as kappa approaches kappa*, which is
the expected divergence of the solution norm at the phase transition.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import BracketFailure, NoConvergence, NotInRegime
from .feature_map import DataModelSpec, FeatureMap, best_risk, noise_for
from .gaussian_core import NoiseModelV, gauss_hermite, normal_tail, v_nodes
from .logistic_scalar import loss_d1, loss_d2, prox_logistic_array
from .phase_transition import kappa_star_cached

__all__ = [
    "MlSolution",
    "ml_residuals",
    "ml_residuals_generic",
    "solve_ml",
    "ml_predictions",
]


@dataclass(frozen=True)
class MlSolution:
    """Converged (mu, alpha, lam) triple with diagnostics.

    lam is the proximal parameter (the symbol lambda, renamed for Python);
    residuals holds the three equation residuals at the returned point.
    """

    mu: float
    alpha: float
    lam: float
    residuals: tuple
    iterations: int
    converged: bool


def _warm_root(f, x0: float, lo_lim: float = None, xtol: float = 1e-12,
               grow: float = 1.7, max_expand: int = 70) -> float:
    """Root of a monotone f, bracketing outward from the warm start x0.

    Expands geometrically in both directions until the sign changes, then
    polishes with Brent's method.  Exact zeros short-circuit (np.sign would
    treat them as a spurious third sign).
    """
    x0 = float(x0)
    if lo_lim is not None:
        x0 = max(x0, lo_lim)
    f0 = f(x0)
    if f0 == 0.0:
        return x0
    a = b = x0
    fa = fb = f0
    step = max(abs(x0) * 0.15, 1e-3)
    for _ in range(max_expand):
        b2 = b + step
        fb2 = f(b2)
        if fb2 == 0.0:
            return b2
        if (fb2 > 0.0) != (fb > 0.0):
            return brentq(f, b, b2, xtol=xtol, rtol=8.9e-16)
        b, fb = b2, fb2
        a2 = a - step
        if lo_lim is not None:
            a2 = max(a2, lo_lim)
        if a2 < a:
            fa2 = f(a2)
            if fa2 == 0.0:
                return a2
            if (fa2 > 0.0) != (fa > 0.0):
                return brentq(f, a2, a, xtol=xtol, rtol=8.9e-16)
            a, fa = a2, fa2
        step *= grow
    raise BracketFailure(f"no sign change found around {x0}")


class _TensorSystem:
    """Two-dimensional (H, V) evaluator with a prox warm start.

    H uses a Gauss-Hermite rule (the prox-composed integrand is smooth);
    V uses its discrete measure.  The prox solve at all tensor nodes is
    warm-started from the previous evaluation, which the Gauss-Seidel
    sweep visits at nearby parameters.
    """

    def __init__(self, noise: NoiseModelV, kappa: float,
                 nodes_h: int = 64, nodes_v: int = 96):
        self.kappa = kappa
        hz, hw = gauss_hermite(nodes_h)
        v, w = v_nodes(noise, nodes_v)
        self.V = v[None, :]
        self.H = hz[:, None]
        self.W2 = hw[:, None] * w[None, :]
        self._prox_prev = None

    def prox_at(self, mu, alpha, lam):
        p = prox_logistic_array(alpha * self.H + mu * self.V, lam,
                                v0=self._prox_prev)
        self._prox_prev = p
        return p

    def eq1(self, mu, alpha, lam):
        return float(np.sum(self.V * loss_d1(self.prox_at(mu, alpha, lam)) * self.W2))

    def eq3(self, mu, alpha, lam):
        l2 = lam * loss_d2(self.prox_at(mu, alpha, lam))
        return self.kappa - float(np.sum(l2 / (1.0 + l2) * self.W2))

    def alpha_from_eq2(self, mu, alpha, lam):
        m2 = float(np.sum(loss_d1(self.prox_at(mu, alpha, lam)) ** 2 * self.W2))
        return lam * np.sqrt(m2 / self.kappa)

    def residuals(self, mu, alpha, lam):
        p = self.prox_at(mu, alpha, lam)
        l1 = loss_d1(p)
        l2 = lam * loss_d2(p)
        return (float(np.sum(self.V * l1 * self.W2)),
                alpha * alpha * self.kappa - lam * lam * float(np.sum(l1 * l1 * self.W2)),
                self.kappa - float(np.sum(l2 / (1.0 + l2) * self.W2)))


class _MixtureSystem:
    """One-dimensional evaluator over G ~ N(mu s, alpha^2 + mu^2)."""

    def __init__(self, noise: NoiseModelV, kappa: float, nodes: int = 96):
        self.kappa = kappa
        self.s = noise.s
        self.z, self.w = gauss_hermite(nodes)
        self._prox_prev = None

    def prox_at(self, mu, alpha, lam):
        g = mu * self.s + np.sqrt(alpha * alpha + mu * mu) * self.z
        p = prox_logistic_array(g, lam, v0=self._prox_prev)
        self._prox_prev = p
        return p

    def eq1(self, mu, alpha, lam):
        # Reformulated first equation: mu kappa + s E[lambda l'(P)] = 0.
        l1 = loss_d1(self.prox_at(mu, alpha, lam))
        return mu * self.kappa + self.s * lam * float(l1 @ self.w)

    def eq3(self, mu, alpha, lam):
        l2 = lam * loss_d2(self.prox_at(mu, alpha, lam))
        return self.kappa - float((l2 / (1.0 + l2)) @ self.w)

    def alpha_from_eq2(self, mu, alpha, lam):
        l1 = loss_d1(self.prox_at(mu, alpha, lam))
        return lam * np.sqrt(float((l1 * l1) @ self.w) / self.kappa)

    def residuals(self, mu, alpha, lam):
        # Reported in the generic form: eq1 residual is E[V l'(P)] computed
        # through Stein's identity, so it matches the tensor path pointwise.
        p = self.prox_at(mu, alpha, lam)
        l1 = loss_d1(p)
        l2 = loss_d2(p)
        r1 = self.s * float(l1 @ self.w) + mu * float((l2 / (1.0 + lam * l2)) @ self.w)
        r2 = alpha * alpha * self.kappa - lam * lam * float((l1 * l1) @ self.w)
        r3 = self.kappa - float((lam * l2 / (1.0 + lam * l2)) @ self.w)
        return (r1, r2, r3)


def _system_for(noise: NoiseModelV, kappa: float,
                nodes_h: int = 64, nodes_v: int = 96):
    if noise.model == "GmShifted":
        return _MixtureSystem(noise, kappa, nodes=nodes_v)
    return _TensorSystem(noise, kappa, nodes_h=nodes_h, nodes_v=nodes_v)


def ml_residuals(mu: float, alpha: float, lam: float, model: DataModelSpec,
                 noise: NoiseModelV, kappa: float,
                 nodes_h: int = 64, nodes_v: int = 96) -> np.ndarray:
    """Residuals (LHS - RHS) of the three asymptotic equations.

    kappa enters the second and third equations explicitly, so it must be
    supplied along with the noise model.  The mixture model is evaluated on
    its one-dimensional reduction; the residuals are reported in the generic
    form either way, so the two code paths are directly comparable.
    """
    if model is not None:
        expected = "GmShifted" if model.kind == "GaussianMixture" else "LogisticGY"
        if noise.model != expected:
            raise ValueError("model kind and noise model disagree")
    system = _system_for(noise, kappa, nodes_h, nodes_v)
    return np.asarray(system.residuals(mu, alpha, lam), dtype=float)


def ml_residuals_generic(mu: float, alpha: float, lam: float,
                         noise: NoiseModelV, kappa: float,
                         nodes_h: int = 64, nodes_v: int = 96) -> np.ndarray:
    """Residuals through the two-dimensional tensor path for any model.

    Independent of the mixture reduction; used to cross-validate it.
    """
    system = _TensorSystem(noise, kappa, nodes_h=nodes_h, nodes_v=nodes_v)
    return np.asarray(system.residuals(mu, alpha, lam), dtype=float)


def solve_ml(model: DataModelSpec, fmap: FeatureMap, kappa: float,
             init=(1.0, 1.0, 1.0), damping: float = 0.5,
             margin: float = 1e-3, change_tol: float = 1e-9,
             residual_tol: float = 1e-6, max_outer: int = 10_000,
             blowup: float = 1e8, nodes_h: int = 64,
             nodes_v: int = 96) -> MlSolution:
    """Solve the three-equation system at ratio kappa < kappa*.

    Damped Gauss-Seidel with update order (lambda, mu, alpha): lambda and mu
    by warm-bracketed Brent root solves of their equations (holding the
    others fixed), alpha in closed form, each move damped by `damping`.
    Inner root tolerances are staged: coarse while the outer iterate moves,
    tightening to 1e-13 as it settles.  Raises NotInRegime at or above
    kappa* - margin and NoConvergence (with the last iterate attached) if
    the sweep exhausts max_outer passes or the iterate exceeds `blowup`.
    """
    kappa_star = kappa_star_cached(model, fmap)
    if kappa >= kappa_star - margin:
        raise NotInRegime(
            f"kappa={kappa} is not below kappa*={kappa_star:.6f} - {margin}")
    noise = noise_for(model, fmap, kappa)
    system = _system_for(noise, kappa, nodes_h, nodes_v)

    mu, alpha, lam = (float(x) for x in init)
    change = 1.0
    for it in range(1, max_outer + 1):
        mu0, alpha0, lam0 = mu, alpha, lam
        xtol = min(1e-10, max(1e-13, 1e-3 * change))
        lam_root = _warm_root(lambda t: system.eq3(mu, alpha, t), lam,
                              lo_lim=1e-12, xtol=xtol)
        lam = lam0 + damping * (lam_root - lam0)
        mu_root = _warm_root(lambda t: system.eq1(t, alpha, lam), mu, xtol=xtol)
        mu = mu0 + damping * (mu_root - mu0)
        alpha = alpha0 + damping * (system.alpha_from_eq2(mu, alpha, lam) - alpha0)
        if max(alpha, lam) > blowup:
            raise NoConvergence(
                f"iterate diverging at kappa={kappa} (alpha={alpha:.3g})",
                last_iterate=(mu, alpha, lam))
        change = max(abs(mu - mu0), abs(alpha - alpha0), abs(lam - lam0))
        rel = change / (1.0 + max(abs(mu), abs(alpha), abs(lam)))
        if rel <= change_tol:
            res = system.residuals(mu, alpha, lam)
            converged = max(abs(x) for x in res) <= residual_tol
            return MlSolution(mu=mu, alpha=alpha, lam=lam,
                              residuals=tuple(res), iterations=it,
                              converged=converged)
    raise NoConvergence(f"no convergence after {max_outer} passes at kappa={kappa}",
                        last_iterate=(mu, alpha, lam))


def ml_predictions(sol: MlSolution, model: DataModelSpec, s: float, r: float,
                   nodes_v: int = 96):
    """(risk, cosine, excess) implied by a converged solution.

    cosine = s mu / (r sqrt(mu^2 + alpha^2)); risk = P(mu V + alpha H < 0),
    which closes to Q(mu s / sqrt(mu^2 + alpha^2)) for the mixture model and
    averages Q(mu v / alpha) over the V measure for the logistic model;
    excess subtracts the full-knowledge baseline.
    """
    mu, alpha = sol.mu, sol.alpha
    norm = np.sqrt(mu * mu + alpha * alpha)
    cosine = s * mu / (r * norm)
    if model.kind == "GaussianMixture":
        risk = float(normal_tail(mu * s / norm))
    else:
        noise = NoiseModelV(model="LogisticGY", s=s, r=r)
        v, w = v_nodes(noise, nodes_v)
        risk = float(normal_tail(mu * v / alpha) @ w)
    excess = risk - best_risk(model)
    return risk, cosine, excess

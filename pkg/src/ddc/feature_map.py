"""Feature-selection parameterizations s(kappa) and the best-risk baseline.

A learner that trains p = kappa * n out of d latent coordinates sees only a
fraction of the total signal strength r.  The observed strength s(kappa) is
parameterized two ways:

    Linear      s^2 = r^2 * kappa / zeta          on kappa in (0, zeta]
    Polynomial  s^2 = r^2 * (1 - (1 + kappa)^-gamma)   on kappa > 0

and the unobserved remainder has strength sigma(kappa) = sqrt(r^2 - s^2).
Both maps are strictly increasing: adding features always adds signal.

The excess-risk baseline is the risk of the best linear classifier that knows
the full feature vector: E sigmoid(-r |G|) under the logistic label model
(the optimal direction scores r|G| and the label flips with the sigmoid
probability), and the Gaussian tail Q(r) under the two-component mixture.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import OutOfDomain
from .gaussian_core import NoiseModelV, QuadratureSpec, normal_rule, normal_tail

__all__ = [
    "DataModelSpec",
    "FeatureMap",
    "signal_strength",
    "noise_for",
    "best_risk",
]


@dataclass(frozen=True)
class DataModelSpec:
    """Which generative model produces the labels.

    kind is "Logistic" (y ~ Rademacher(sigmoid(x . eta0))) or
    "GaussianMixture" (x ~ N(y * eta0, I)); r is the total signal strength
    ||eta0||; prior_plus is the probability of the +1 class (mixture model
    only, default balanced).
    """

    kind: str
    r: float
    prior_plus: float = 0.5

    def __post_init__(self):
        if self.kind not in ("Logistic", "GaussianMixture"):
            raise ValueError(f"unknown data model kind: {self.kind!r}")
        if not self.r > 0.0:
            raise ValueError("r must be positive")
        if not 0.0 < self.prior_plus < 1.0:
            raise ValueError("prior_plus must lie in (0, 1)")


@dataclass(frozen=True)
class FeatureMap:
    """The map kappa -> s(kappa).

    kind is "Linear" (requires zeta = d/n >= 1) or "Polynomial" (requires
    gamma >= 1).  r = 0 is allowed and gives the degenerate map s == 0, which
    is useful as the zero-signal reference configuration.
    """

    kind: str
    r: float
    zeta: float = None
    gamma: float = None

    def __post_init__(self):
        if self.kind not in ("Linear", "Polynomial"):
            raise ValueError(f"unknown feature map kind: {self.kind!r}")
        if self.r < 0.0:
            raise ValueError("r must be nonnegative")
        if self.kind == "Linear":
            if self.zeta is None or not self.zeta >= 1.0:
                raise ValueError("Linear map requires zeta >= 1")
        else:
            if self.gamma is None or not self.gamma >= 1.0:
                raise ValueError("Polynomial map requires gamma >= 1")


def signal_strength(fmap: FeatureMap, kappa: float):
    """Observed and residual strengths (s, sigma) at ratio kappa.

    Raises OutOfDomain for kappa <= 0 and, for the Linear map, for kappa
    beyond zeta (there are no more features to add).
    """
    if not kappa > 0.0:
        raise OutOfDomain(f"kappa must be positive, got {kappa}")
    r2 = fmap.r ** 2
    if fmap.kind == "Linear":
        if kappa > fmap.zeta * (1.0 + 1e-12):
            raise OutOfDomain(f"kappa={kappa} exceeds zeta={fmap.zeta}")
        s2 = r2 * min(kappa / fmap.zeta, 1.0)
    else:
        s2 = r2 * (1.0 - (1.0 + kappa) ** (-fmap.gamma))
    s = float(np.sqrt(s2))
    sigma = float(np.sqrt(max(r2 - s2, 0.0)))
    return s, sigma


def noise_for(model: DataModelSpec, fmap: FeatureMap, kappa: float) -> NoiseModelV:
    """NoiseModelV for the given data model at the map's ratio kappa."""
    s, sigma = signal_strength(fmap, kappa)
    tag = "LogisticGY" if model.kind == "Logistic" else "GmShifted"
    return NoiseModelV(model=tag, s=s, r=fmap.r, sigma=sigma)


def best_risk(model: DataModelSpec, quad: QuadratureSpec = QuadratureSpec()) -> float:
    """Risk of the best linear classifier knowing every feature.

    Logistic model: the optimal direction is eta0 itself, whose score on a
    test point is r|G| up to sign, and the label still flips with probability
    sigmoid(-r|G|); the residual risk is E sigmoid(-r|G|), evaluated by the
    1-D normal rule.  Mixture model: the Bayes risk of two unit spheres at
    separation 2r, Q(r).
    """
    if model.kind == "GaussianMixture":
        return float(normal_tail(model.r))
    z, w = normal_rule(quad)
    return float(expit(-model.r * np.abs(z)) @ w)

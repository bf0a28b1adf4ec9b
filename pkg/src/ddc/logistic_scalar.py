"""Scalar calculus for the logistic loss.

The loss and its derivatives:

    l(t)   = log(1 + e^(-t))
    l'(t)  = -sigmoid(-t)            in (-1, 0)
    l''(t) = sigmoid(t) sigmoid(-t)  in (0, 1/4]

The proximal operator and Moreau envelope with parameter tau > 0:

    prox_l(x; tau) = argmin_v  (1/2 tau) (x - v)^2 + l(v)
    env_l(x; tau)  = min_v     (1/2 tau) (x - v)^2 + l(v)

The prox point is the unique root of the strictly increasing function

    g(v) = v - x - tau * sigmoid(-v),

which changes sign on [x, x + tau] since sigmoid is bounded by (0, 1).  All
functions here are overflow-safe for arguments up to |t| ~ 700.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import NoConvergence

__all__ = [
    "sigmoid",
    "loss",
    "loss_d1",
    "loss_d2",
    "ProxResult",
    "prox_logistic",
    "prox_logistic_array",
    "moreau_env",
]


def sigmoid(t):
    """Logistic function 1/(1 + e^(-t)), overflow-safe."""
    return expit(t)


def loss(t):
    """Logistic loss log(1 + e^(-t)), computed as logaddexp(0, -t)."""
    return np.logaddexp(0.0, -np.asarray(t, dtype=float))


def loss_d1(t):
    """First derivative of the logistic loss, -sigmoid(-t)."""
    return -expit(-np.asarray(t, dtype=float))


def loss_d2(t):
    """Second derivative sigmoid(t) sigmoid(-t), bounded by 1/4."""
    t = np.asarray(t, dtype=float)
    return expit(t) * expit(-t)


@dataclass(frozen=True)
class ProxResult:
    """Outcome of a scalar proximal solve.

    value is the prox point, iterations the number of Newton steps taken, and
    residual the final |value - x - tau * sigmoid(-value)|.
    """

    value: float
    iterations: int
    residual: float


def prox_logistic(x: float, lam: float, tol: float = 1e-12,
                  max_iter: int = 200) -> ProxResult:
    """Proximal operator of the logistic loss at x with parameter lam > 0.

    Safeguarded Newton on g(v) = v - x - lam * sigmoid(-v) with the bracket
    [x, x + lam]; a Newton step that leaves the current bracket is replaced
    by bisection.  Raises NoConvergence after max_iter iterations, which
    should be unreachable and indicates a bug.
    """
    if not lam > 0.0:
        raise ValueError("lam must be positive")
    x = float(x)
    lo, hi = x, x + lam
    v = x + lam * float(expit(-x))  # one fixed-point step from v = x
    for it in range(1, max_iter + 1):
        g = v - x - lam * float(expit(-v))
        if abs(g) <= tol:
            return ProxResult(value=v, iterations=it, residual=abs(g))
        if g > 0.0:
            hi = v
        else:
            lo = v
        step = g / (1.0 + lam * float(loss_d2(v)))
        vn = v - step
        if not lo < vn < hi:
            vn = 0.5 * (lo + hi)
        if vn == v:
            # Bracket collapsed to machine precision; g is as small as the
            # floating-point evaluation allows.
            return ProxResult(value=v, iterations=it, residual=abs(g))
        v = vn
    raise NoConvergence(f"prox_logistic({x}, {lam}) did not reach {tol}",
                        last_iterate=v)


def prox_logistic_array(x, lam: float, v0=None, max_iter: int = 80):
    """Vectorized proximal operator, returning prox values only.

    Runs the same safeguarded Newton iteration simultaneously on every entry
    of x.  v0 optionally warm-starts the iteration (values are clipped back
    into the per-entry bracket [x, x + lam]).  Converges to relative accuracy
    ~1e-13, which is what the asymptotic solvers need at quadrature nodes of
    arbitrary magnitude.
    """
    x = np.asarray(x, dtype=float)
    lo = x.copy()
    hi = x + lam
    if v0 is not None:
        v = np.clip(np.asarray(v0, dtype=float), lo, hi)
    else:
        v = x + lam * expit(-x)
    for _ in range(max_iter):
        g = v - x - lam * expit(-v)
        lo = np.where(g < 0.0, v, lo)
        hi = np.where(g > 0.0, v, hi)
        vn = v - g / (1.0 + lam * expit(v) * expit(-v))
        bad = (vn < lo) | (vn > hi)
        if np.any(bad):
            vn = np.where(bad, 0.5 * (lo + hi), vn)
        err = np.max(np.abs(vn - v))
        v = vn
        if err < 1e-13 * (1.0 + np.max(np.abs(v))):
            break
    return v


def moreau_env(x: float, tau: float) -> float:
    """Moreau envelope of the logistic loss, evaluated through the prox.

    env_l(x; tau) = (1/2 tau)(x - v)^2 + l(v) at v = prox_l(x; tau).
    Satisfies 0 <= env_l(x; tau) <= l(x).
    """
    if not tau > 0.0:
        raise ValueError("tau must be positive")
    v = prox_logistic(x, tau).value
    return float((x - v) ** 2 / (2.0 * tau) + loss(v))

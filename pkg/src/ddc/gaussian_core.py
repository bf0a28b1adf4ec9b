"""Standard-normal primitives and a deterministic Gaussian expectation engine.

The asymptotic theory reduces every prediction to expectations of functionals
of a pair (H, V): H is standard normal, and V depends on the data model
through the signal strength s and residual strength sigma = sqrt(r^2 - s^2):

  * GmShifted:   V = G + s with G standard normal, so V ~ N(s, 1);
  * LogisticGY:  V = G Y where, conditionally on G = g and an independent
    latent Z, the label is +1 with probability sigmoid(s g + sigma Z).
    Integrating Z out gives the mixing weight

        p(g) = E_Z sigmoid(s g + sigma Z),

    and the law of V is the two-point mixture p(g) delta_g + (1-p(g)) delta_-g
    averaged over g ~ N(0, 1).

Expectations are evaluated with fixed tensor rules over the Gaussian
dimensions.  The public engine uses a composite Gauss-Legendre rule weighted
by the normal density: unlike a bare Gauss-Hermite rule it keeps full accuracy
on integrands with kinks, such as the truncated square (x)_-^2 that the phase
transition is built from.  A classical Gauss-Hermite rule is also provided
for smooth integrands (the solvers use it where spectral accuracy applies).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import erfc, expit, roots_hermite

from .errors import NonFiniteIntegrand

__all__ = [
    "normal_pdf",
    "normal_tail",
    "truncated_second_moment",
    "QuadratureSpec",
    "NoiseModelV",
    "normal_rule",
    "gauss_hermite",
    "mean_sigmoid",
    "v_nodes",
    "expect_HV",
]

_SQRT2PI = np.sqrt(2.0 * np.pi)
_SQRT2 = np.sqrt(2.0)


def normal_pdf(t):
    """Standard normal density psi(t) = exp(-t^2/2) / sqrt(2 pi)."""
    t = np.asarray(t, dtype=float)
    out = np.exp(-0.5 * t * t) / _SQRT2PI
    return float(out) if out.ndim == 0 else out


def normal_tail(t):
    """Upper tail Q(t) = P(G > t), via the complementary error function.

    Q(t) = erfc(t / sqrt(2)) / 2 keeps full relative accuracy deep in the
    right tail, where 1 - Phi(t) would cancel catastrophically.
    """
    t = np.asarray(t, dtype=float)
    out = 0.5 * erfc(t / _SQRT2)
    return float(out) if out.ndim == 0 else out


def truncated_second_moment(m):
    """E (X)_-^2 for X ~ N(m, 1), where (x)_- = min(x, 0).

    Closed form (1 + m^2) Q(m) - m psi(m): integrate x^2 over the negative
    half-axis against the shifted normal density.  Strictly positive and
    strictly decreasing in m, with limits 1/2 at m = 0 (half the variance)
    and 0 as m -> +inf.
    """
    m = np.asarray(m, dtype=float)
    out = (1.0 + m * m) * normal_tail(m) - m * normal_pdf(m)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class QuadratureSpec:
    """Resolution of the fixed tensor quadrature.

    nodes_per_dim counts composite panels per Gaussian dimension (each panel
    carries a small fixed-order Gauss-Legendre rule); the scheme tag names
    the family and is fixed in this version.
    """

    nodes_per_dim: int = 64
    scheme: str = "gauss-hermite-tensor"

    def __post_init__(self):
        if self.nodes_per_dim < 8:
            raise ValueError("nodes_per_dim must be at least 8")
        if self.scheme != "gauss-hermite-tensor":
            raise ValueError(f"unknown quadrature scheme: {self.scheme!r}")


@dataclass(frozen=True)
class NoiseModelV:
    """Distribution parameters of the random variable V.

    model selects the label mechanism ("LogisticGY" or "GmShifted"); s is the
    observed signal strength, r the total strength, and sigma the strength of
    the unobserved part, sigma^2 = r^2 - s^2.  sigma may be omitted, in which
    case it is derived.  s = 0 is allowed and makes V standard normal
    (symmetric) under both models.
    """

    model: str
    s: float
    r: float
    sigma: float = None

    def __post_init__(self):
        if self.model not in ("LogisticGY", "GmShifted"):
            raise ValueError(f"unknown noise model: {self.model!r}")
        if not 0.0 <= self.s <= self.r * (1.0 + 1e-12):
            raise ValueError("requires 0 <= s <= r")
        if self.sigma is None:
            derived = float(np.sqrt(max(self.r ** 2 - self.s ** 2, 0.0)))
            object.__setattr__(self, "sigma", derived)
        if abs(self.sigma ** 2 - (self.r ** 2 - self.s ** 2)) > 1e-12 * (1.0 + self.r ** 2):
            raise ValueError("sigma^2 must equal r^2 - s^2")


@lru_cache(maxsize=32)
def _composite_rule(panels: int, order: int = 8, halfwidth: float = 8.0):
    """Composite Gauss-Legendre nodes/weights against the normal density.

    [-halfwidth, halfwidth] is split into `panels` equal panels, each carrying
    a Gauss-Legendre rule of the given order; the weights absorb the normal
    density and are normalized to sum exactly to one (the mass outside eight
    standard deviations is ~1e-15).  At the default resolution the panel
    width is 1/4, so integrands with kinks on the quarter-integer lattice
    (the truncated squares at integer shifts, |x|, and friends) stay
    piecewise-smooth panel by panel and keep spectral accuracy; a kink at a
    generic interior point degrades gracefully to ~1e-7.
    """
    gx, gw = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(-halfwidth, halfwidth, panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])[:, None]
    half = 0.5 * (edges[1:] - edges[:-1])[:, None]
    nodes = (mid + half * gx[None, :]).ravel()
    weights = (half * gw[None, :]).ravel() * normal_pdf(nodes)
    weights = weights / weights.sum()
    return nodes, weights


def normal_rule(quad: QuadratureSpec):
    """Nodes and weights (z, w) with sum(w) = 1 and E f(G) ~ sum(w f(z))."""
    return _composite_rule(quad.nodes_per_dim)


@lru_cache(maxsize=32)
def gauss_hermite(n: int):
    """Classical Gauss-Hermite rule transformed to the standard normal.

    With x_i, w_i the physicists' nodes/weights for int e^{-x^2} g(x) dx,
    the change of variable z = sqrt(2) x gives E f(G) ~ sum (w_i/sqrt(pi))
    f(sqrt(2) x_i).  Exact for polynomials of degree < 2n; use only on
    smooth integrands.
    """
    x, w = roots_hermite(n)
    return _SQRT2 * x, w / np.sqrt(np.pi)


# Fixed high-accuracy rules for the label-mixing integral E_Z sigmoid(a + sigma Z).
_MIX_Z, _MIX_W = None, None
_CORR_T, _CORR_W = None, None


def _mix_tables():
    global _MIX_Z, _MIX_W, _CORR_T, _CORR_W
    if _MIX_Z is None:
        _MIX_Z, _MIX_W = gauss_hermite(96)
        # Panels for the integral of the bounded odd part of the sigmoid,
        # c(t) = sigmoid(t) - 1 on t >= 0, which decays like e^{-t}.
        gx, gw = np.polynomial.legendre.leggauss(12)
        edges = np.linspace(0.0, 45.0, 41)
        mid = 0.5 * (edges[:-1] + edges[1:])[:, None]
        half = 0.5 * (edges[1:] - edges[:-1])[:, None]
        _CORR_T = (mid + half * gx[None, :]).ravel()
        _CORR_W = (half * gw[None, :]).ravel() * (-expit(-_CORR_T))
    return _MIX_Z, _MIX_W, _CORR_T, _CORR_W


def mean_sigmoid(a, sigma: float):
    """E_Z sigmoid(a + sigma Z) for Z standard normal, vectorized in a.

    For sigma <= 1 a 96-node Gauss-Hermite rule is spectrally accurate.  For
    larger sigma the sigmoid sharpens into a step on the scale of the
    Gaussian and fixed Hermite nodes undersample it, so the exact split

        sigmoid(u) = 1{u > 0} + sign-odd bounded correction

    is used instead:

        E = Phi(a/sigma)
            + int_0^inf c(t) [psi((t-a)/sigma) - psi((t+a)/sigma)] / sigma dt,

    with c(t) = -sigmoid(-t).  The correction integrand decays like e^{-t}
    and is integrated by a fixed composite Gauss-Legendre rule on [0, 45].
    """
    z, w, tc, twc = _mix_tables()
    a = np.asarray(a, dtype=float)
    if sigma <= 1.0:
        out = expit(a[..., None] + sigma * z) @ w
    else:
        corr = ((normal_pdf((tc - a[..., None]) / sigma)
                 - normal_pdf((tc + a[..., None]) / sigma)) @ twc) / sigma
        out = 1.0 - normal_tail(a / sigma) + corr
    return float(out) if out.ndim == 0 else out


def v_nodes(noise: NoiseModelV, n: int = 96):
    """Discrete measure (values, weights) representing the law of V.

    Built on an n-node Gauss-Hermite rule: for GmShifted the nodes shift to
    z + s; for LogisticGY each node z splits into the signed pair (z, -z)
    weighted by the mixing probability p(z) = E_Z sigmoid(s z + sigma Z) and
    its complement.  Weights sum to 1.  Intended for the solvers, whose
    integrands are smooth functions of V after the H dimension is handled
    analytically or by its own rule.
    """
    z, w = gauss_hermite(n)
    if noise.model == "GmShifted":
        return z + noise.s, w
    p = mean_sigmoid(noise.s * z, noise.sigma)
    return np.concatenate([z, -z]), np.concatenate([w * p, w * (1.0 - p)])


def _apply(f, h, v):
    try:
        vals = np.asarray(f(h, v), dtype=float)
    except (TypeError, ValueError):
        vals = np.vectorize(f, otypes=[float])(h, v)
    return np.broadcast_to(vals, np.broadcast_shapes(h.shape, v.shape))


def expect_HV(f, noise: NoiseModelV, quad: QuadratureSpec = QuadratureSpec()):
    """Deterministic E f(H, V) over independent H ~ N(0,1) and V.

    The H dimension and the Gaussian part of V are both integrated with the
    composite normal rule of `quad`; for LogisticGY the label-mixing weight
    is precomputed per Gaussian node, so the latent Z never becomes an
    explicit quadrature dimension.  f may be any callable of two array (or
    scalar) arguments bounded by a polynomial on the integration range.

    Raises NonFiniteIntegrand if any node evaluation is NaN or infinite.
    """
    h, wh = normal_rule(quad)
    g, wg = normal_rule(quad)
    if noise.model == "GmShifted":
        v, wv = g + noise.s, wg
    else:
        p = mean_sigmoid(noise.s * g, noise.sigma)
        v = np.concatenate([g, -g])
        wv = np.concatenate([wg * p, wg * (1.0 - p)])
    vals = _apply(f, h[:, None], v[None, :])
    if not np.all(np.isfinite(vals)):
        raise NonFiniteIntegrand("integrand evaluated to a non-finite value")
    return float(wh @ vals @ wv)

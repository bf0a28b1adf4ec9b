"""Finite-size training sets under the two generative models.

A training example is a latent feature vector x of dimension d with a label,
of which the learner observes only the first p = round(kappa * n)
coordinates.  Choosing the true direction along the first axis (rotational
invariance makes this lossless), the observed block carries strength s(kappa)
and the truncated remainder acts through the scalar sigma(kappa) only:

  * Logistic: w ~ N(0, I_p) and y = +1 with probability
    sigmoid(s w_1 + sigma z) for an independent latent z ~ N(0, 1);
  * Gaussian mixture: y = +-1 with prior prior_plus, w = y [s, 0, ..] + N(0, I_p).

The unobserved d - p coordinates are never materialized; for the Linear map
d = round(zeta n) is recorded in the metadata, while the Polynomial map has
no finite d (the remainder strength is encoded directly by sigma) and d is
stored as None.

Randomness comes from a counter-based Philox generator keyed by (seed,
stream), so parallel trials draw from provably disjoint streams and every
TrainSet is bit-reproducible from its key.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import BadShape
from .feature_map import DataModelSpec, FeatureMap, signal_strength

__all__ = [
    "DataModelSpec",
    "TrainSetMeta",
    "TrainSet",
    "generate",
    "dump_csv",
]


@dataclass(frozen=True)
class TrainSetMeta:
    """Provenance of a generated TrainSet."""

    n: int
    p: int
    d: int
    s: float
    sigma: float
    seed: tuple


@dataclass(frozen=True)
class TrainSet:
    """n observed feature rows with their labels."""

    features: np.ndarray
    labels: np.ndarray
    meta: TrainSetMeta


def _rng_for(seed) -> np.random.Generator:
    key = np.asarray(seed if isinstance(seed, tuple) else (seed, 0),
                     dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def generate(model: DataModelSpec, fmap: FeatureMap, n: int, kappa: float,
             seed) -> TrainSet:
    """Draw a training set of n examples at ratio kappa.

    seed is a 64-bit integer or a (seed, stream) pair; the pair form gives
    each Monte Carlo trial its own independent stream.  p = round(kappa n)
    with ties to even; BadShape if that leaves no observed feature.
    """
    if n < 2:
        raise BadShape(f"need at least 2 samples, got n={n}")
    p = int(round(kappa * n))
    if p < 1:
        raise BadShape(f"round(kappa*n) = {p} observed features")
    s, sigma = signal_strength(fmap, kappa)
    d = int(round(fmap.zeta * n)) if fmap.kind == "Linear" else None
    rng = _rng_for(seed)
    if model.kind == "Logistic":
        w = rng.standard_normal((n, p))
        z = rng.standard_normal(n)
        u = rng.random(n)
        y = np.where(u < expit(s * w[:, 0] + sigma * z), 1.0, -1.0)
    else:
        u = rng.random(n)
        y = np.where(u < model.prior_plus, 1.0, -1.0)
        w = rng.standard_normal((n, p))
        w[:, 0] += y * s
    meta = TrainSetMeta(n=n, p=p, d=d, s=s, sigma=sigma,
                        seed=seed if isinstance(seed, tuple) else (seed, 0))
    return TrainSet(features=w, labels=y, meta=meta)


def dump_csv(data: TrainSet, path: str) -> None:
    """Write a TrainSet to CSV with header y, w_1, ..., w_p."""
    n, p = data.features.shape
    header = ",".join(["y"] + [f"w_{j}" for j in range(1, p + 1)])
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for i in range(n):
            row = [f"{int(data.labels[i]):d}"]
            row += [f"{x:.17g}" for x in data.features[i]]
            fh.write(",".join(row) + "\n")

"""Finite-size training algorithms and exact test metrics.

Two trainers operate on a TrainSet:

  * gd_logistic: full-batch gradient descent on the empirical logistic loss
    with fixed step 1/L.  On non-separable data the loss has a bounded
    minimizer and the iteration stops at gradient norm <= 1e-8.  On
    separable data the iterates diverge logarithmically while their
    direction drifts toward the max-margin direction like 1/log t; the
    returned direction is a three-snapshot Richardson extrapolation of the
    normalized iterate in log-time, which removes the leading 1/log t term
    (the raw final iterate sits in the diagnostics).

  * svm_train: hard-margin SVM by coordinate ascent on the dual
    max_{u >= 0} sum(u) - 0.5 ||sum u_i y_i w_i||^2, after an exact linear
    feasibility check decides separability.  KKT violation at most 1e-6 on
    converged output.

exact_metrics evaluates a trained weight vector analytically: splitting
beta into its component b1 along the true axis and the orthogonal norm a,
the test risk is P(b1 V + a H < 0) (logistic) or Q(s b1 / ||beta||)
(mixture), with no test-set sampling noise.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from scipy.special import expit

from .errors import ZeroVector
from .feature_map import DataModelSpec, best_risk
from .gaussian_core import NoiseModelV, normal_tail, v_nodes
from .datagen import TrainSet

__all__ = [
    "TrainedClassifier",
    "GdConfig",
    "SvmConfig",
    "is_separable",
    "gd_logistic",
    "svm_train",
    "exact_metrics",
]


@dataclass(frozen=True)
class TrainedClassifier:
    """A trained weight vector with training diagnostics.

    diagnostics carries iterations plus final_gradient_norm (gradient
    descent) or kkt_violation (SVM), and flags such as iteration_cap.
    """

    beta: np.ndarray
    method: str
    train_error: float
    separable: bool
    diagnostics: dict


@dataclass(frozen=True)
class GdConfig:
    max_iter: int = 200_000
    grad_tol: float = 1e-8
    direction_tol: float = 1e-9
    power_iters: int = 30


@dataclass(frozen=True)
class SvmConfig:
    max_epochs: int = 5_000
    kkt_tol: float = 1e-6
    norm_cap: float = 1e6
    dual_cap: float = 1e12
    seed: int = 0


def is_separable(data: TrainSet) -> bool:
    """Exact separability test: does some beta give y_i w_i . beta >= 1?

    A feasibility linear program with free variables and constraints
    -(y_i w_i) . beta <= -1.  Scaling makes "margin >= 1 feasible"
    equivalent to strict linear separability.
    """
    a = data.labels[:, None] * data.features
    n, p = a.shape
    res = linprog(c=np.zeros(p), A_ub=-a, b_ub=-np.ones(n),
                  bounds=[(None, None)] * p, method="highs")
    return res.status == 0


def _train_error(beta: np.ndarray, data: TrainSet) -> float:
    margins = (data.labels[:, None] * data.features) @ beta
    return float(np.mean(margins <= 0.0))


def gd_logistic(data: TrainSet, config: GdConfig = GdConfig()) -> TrainedClassifier:
    """Gradient descent on the empirical logistic loss, fixed step 1/L.

    L = sigma_max(W)^2 / (4n) bounds the loss curvature; the top singular
    value comes from a short power iteration.  Stopping: gradient norm
    <= grad_tol (non-separable branch), or per-step change of the
    normalized direction <= direction_tol with zero training error
    (separable branch); otherwise the iteration cap, flagged in the
    diagnostics.  Separability is witnessed by zero training error.

    For runs that end in the separable branch the returned beta points
    along the Richardson-extrapolated direction (see the module docstring);
    its norm, the raw final iterate, and the stop reason are all recorded
    in diagnostics.
    """
    a = data.labels[:, None] * data.features
    n, p = a.shape
    rng = np.random.Generator(np.random.Philox(key=np.asarray(
        data.meta.seed, dtype=np.uint64)))
    x = rng.standard_normal(p)
    for _ in range(config.power_iters):
        x = a.T @ (a @ x)
        x /= np.linalg.norm(x)
    smax2 = float(x @ (a.T @ (a @ x)))
    step = 4.0 * n / smax2

    t = config.max_iter
    snap_at = {max(t // 4, 1): None, max(t // 2, 2): None}
    beta = np.zeros(p)
    prev_dir = None
    grad_norm = np.inf
    stop = "iteration_cap"
    it = 0
    for it in range(1, t + 1):
        grad = -(a.T @ expit(-(a @ beta))) / n
        beta -= step * grad
        if it in snap_at:
            snap_at[it] = beta.copy()
        grad_norm = float(np.linalg.norm(grad))
        if grad_norm <= config.grad_tol:
            stop = "gradient"
            break
        nrm = np.linalg.norm(beta)
        if nrm > 0:
            cur_dir = beta / nrm
            if prev_dir is not None and np.linalg.norm(cur_dir - prev_dir) <= config.direction_tol:
                if _train_error(beta, data) == 0.0:
                    stop = "direction"
                    break
            prev_dir = cur_dir
    train_error = _train_error(beta, data)
    raw = beta.copy()
    diagnostics = {
        "iterations": it,
        "final_gradient_norm": grad_norm,
        "iteration_cap": stop == "iteration_cap",
        "stop": stop,
        "raw_beta": raw,
    }
    separable = train_error == 0.0
    out = beta
    quarter, half = sorted(snap_at)
    if (separable and stop == "iteration_cap"
            and snap_at[quarter] is not None and snap_at[half] is not None):
        # On separable data beta(t) = bhat log t + rho + c / log t + o(1/log t).
        # Differences over a doubling schedule cancel rho exactly:
        # d21 = beta(T) - beta(T/2) = bhat log 2 - c log 2 w1 with
        # w1 = 1/(log T log(T/2)), and similarly d10 with
        # w2 = 1/(log(T/2) log(T/4)); the combination below also cancels
        # the c term, leaving bhat log 2 up to o(1/log T).
        nrm = np.linalg.norm(beta)
        d21 = beta - snap_at[half]
        d10 = snap_at[half] - snap_at[quarter]
        w1 = 1.0 / (np.log(t) * np.log(t / 2.0))
        w2 = 1.0 / (np.log(t / 2.0) * np.log(t / 4.0))
        d_ext = d21 + (w1 / (w2 - w1)) * (d21 - d10)
        d_ext /= np.linalg.norm(d_ext)
        out = d_ext * nrm
        diagnostics["extrapolated"] = True
    return TrainedClassifier(beta=out, method="GdLogistic",
                             train_error=train_error, separable=separable,
                             diagnostics=diagnostics)


def svm_train(data: TrainSet, config: SvmConfig = SvmConfig()) -> TrainedClassifier:
    """Hard-margin SVM via dual coordinate ascent.

    Separability is decided up front by the exact feasibility program; on
    non-separable data the hard-margin problem is infeasible and the result
    carries separable=False with a zero weight vector (a valid return
    state, not an exception).  On separable data the dual
    max_{u>=0} sum(u) - 0.5 u' K u with K_ij = y_i y_j w_i . w_j is
    ascended coordinate-wise (exact per-coordinate maximization, seeded
    random sweep order per epoch) until the worst KKT violation --
    margin shortfall or complementary slackness -- is at most kkt_tol.
    Runaway norms trip the infeasibility guards even if the up-front test
    was skipped.
    """
    a = data.labels[:, None] * data.features
    n, p = a.shape
    if not is_separable(data):
        return TrainedClassifier(beta=np.zeros(p), method="HardMarginSvm",
                                 train_error=1.0, separable=False,
                                 diagnostics={"iterations": 0,
                                              "kkt_violation": np.inf})
    gram = a @ a.T
    diag = np.clip(np.diag(gram), 1e-12, None)
    u = np.zeros(n)
    margins = np.zeros(n)
    rng = np.random.default_rng(config.seed)
    kkt = np.inf
    epoch = 0
    separable = True
    for epoch in range(1, config.max_epochs + 1):
        for i in rng.permutation(n):
            delta = max(0.0, u[i] + (1.0 - margins[i]) / diag[i]) - u[i]
            if delta != 0.0:
                u[i] += delta
                margins += delta * gram[:, i]
        shortfall = float(np.max(1.0 - margins))
        slack = float(np.max(np.abs(margins - 1.0) * (u > 0))) if np.any(u > 0) else 0.0
        kkt = max(shortfall, slack)
        if kkt <= config.kkt_tol:
            break
        dual = float(u.sum() - 0.5 * (u @ margins))
        if dual > config.dual_cap or (u @ margins) > config.norm_cap ** 2:
            separable = False
            break
    beta = a.T @ u
    train_error = _train_error(beta, data) if separable else 1.0
    if not separable:
        beta = np.zeros(p)
    return TrainedClassifier(beta=beta, method="HardMarginSvm",
                             train_error=train_error, separable=separable,
                             diagnostics={"iterations": epoch,
                                          "kkt_violation": kkt,
                                          "dual": u.copy()})


def exact_metrics(beta: np.ndarray, model: DataModelSpec, s: float, r: float,
                  nodes: int = 96):
    """(risk, cosine, excess) of the linear classifier sign(beta . w).

    Exact in the test distribution: only the trained beta is random.
    Raises ZeroVector on the zero weight vector, whose classifier is
    undefined.
    """
    beta = np.asarray(beta, dtype=float)
    norm = float(np.linalg.norm(beta))
    if norm == 0.0:
        raise ZeroVector("metrics of the zero weight vector are undefined")
    b1 = float(beta[0])
    cosine = s * b1 / (r * norm)
    if model.kind == "GaussianMixture":
        risk = float(normal_tail(s * b1 / norm))
    else:
        ortho = float(np.linalg.norm(beta[1:]))
        noise = NoiseModelV(model="LogisticGY", s=s, r=r)
        v, w = v_nodes(noise, nodes)
        if ortho <= 1e-14 * abs(b1):
            risk = float(w @ (b1 * v < 0.0))
        else:
            risk = float(normal_tail(b1 * v / ortho) @ w)
    excess = risk - best_risk(model)
    return risk, cosine, excess

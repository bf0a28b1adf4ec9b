"""Release acceptance suite: nine end-to-end checks with pinned tolerances.

Each test prints one [PASS]/[FAIL] line with its measured numbers, visible
in the live test output, then asserts.  Two checks fail by design and are
analyzed in the README:

  * the pinned baseline-risk anchors (0.133 / 0.098 / 0.084) do not
    match the value of the baseline error law E[sigmoid(-r |G|)] that
    best_risk computes, which an independent quadrature oracle confirms;
  * under the polynomial map with gamma = 5 the global minimum of the
    theory risk curve sits slightly above the interpolation threshold, not
    below it, which matched Monte Carlo simulation confirms.

Everything else is green: absolute risk anchors, threshold properties,
closed form versus generic quadrature agreement, solver residual
certificates, theory versus simulation at n = 200, separability sharpness
at n = 400, gradient descent versus max-margin directions, and the
double-descent shape checks that survive scrutiny.
"""
import time

import numpy as np
import pytest

from ddc.datagen import generate
from ddc.experiment_cli import simulate_point
from ddc.feature_map import (DataModelSpec, FeatureMap, best_risk, noise_for,
                             signal_strength)
from ddc.gaussian_core import NoiseModelV, normal_tail, v_nodes
from ddc.ml_solver import (ml_predictions, ml_residuals,
                           ml_residuals_generic, solve_ml)
from ddc.phase_transition import (kappa_star_cached, solve_kappa_star,
                                  threshold_g, threshold_objective,
                                  threshold_objective_generic)
from ddc.svm_solver import eta, eta_generic, solve_svm, svm_predictions
from ddc.trainers import gd_logistic, is_separable, svm_train

LOGI10 = DataModelSpec(kind="Logistic", r=10.0)
POLY2 = FeatureMap(kind="Polynomial", r=10.0, gamma=2.0)
POLY5 = FeatureMap(kind="Polynomial", r=10.0, gamma=5.0)
LIN3_LOGI = FeatureMap(kind="Linear", r=10.0, zeta=3.0)
GM10 = DataModelSpec(kind="GaussianMixture", r=np.sqrt(10.0))
LIN3_GM = FeatureMap(kind="Linear", r=np.sqrt(10.0), zeta=3.0)
GM2 = DataModelSpec(kind="GaussianMixture", r=2.0)
GM2_NOISE = NoiseModelV(model="GmShifted", s=1.0, r=2.0)

SIX_CONFIGS = [
    (LOGI10, POLY2),
    (LOGI10, POLY5),
    (LOGI10, LIN3_LOGI),
    (GM10, LIN3_GM),
    (GM2, FeatureMap(kind="Polynomial", r=2.0, gamma=2.0)),
    (DataModelSpec(kind="GaussianMixture", r=5.0),
     FeatureMap(kind="Linear", r=5.0, zeta=1.5)),
]


def _report(capsys, name: str, ok: bool, detail: str) -> str:
    line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
    with capsys.disabled():
        print("\n" + line, flush=True)
    return line


def test_baseline_risk_anchors(capsys):
    # Pinned anchors 0.133 / 0.098 / 0.084 for r = 5 / 10 / 25 at
    # tolerance 0.002.  best_risk evaluates E[sigmoid(-r |G|)], the error
    # of the best linear classifier under the logistic law, and an
    # independent quadrature oracle (see the feature map tests) pins the
    # same values, so the anchors themselves are off, not the code.
    start = time.time()
    targets = {5.0: 0.133, 10.0: 0.098, 25.0: 0.084}
    got = {r: best_risk(DataModelSpec(kind="Logistic", r=r)) for r in targets}
    elapsed = time.time() - start
    ok = elapsed < 1.0 and all(
        abs(got[r] - t) <= 0.002 for r, t in targets.items())
    detail = ("baseline risks " +
              ", ".join(f"r={r:g}: {got[r]:.4f} (anchor {t})"
                        for r, t in targets.items()) +
              f"; runtime {elapsed:.2f} s")
    line = _report(capsys, "baseline-risk anchors", ok, detail)
    assert ok, line


def test_underparametrized_risk_anchors(capsys):
    start = time.time()
    targets = {5.0: 0.434, 10.0: 0.429, 25.0: 0.428}
    got = {}
    for r in targets:
        model = DataModelSpec(kind="Logistic", r=r)
        fmap = FeatureMap(kind="Polynomial", r=r, gamma=2.0)
        sol = solve_ml(model, fmap, 0.05)
        s, _ = signal_strength(fmap, 0.05)
        got[r] = ml_predictions(sol, model, s, r)[0]
    elapsed = time.time() - start
    ok = elapsed < 10.0 and all(
        abs(got[r] - t) <= 0.005 for r, t in targets.items())
    detail = ("risk at kappa=0.05, gamma=2: " +
              ", ".join(f"r={r:g}: {got[r]:.4f} (anchor {t})"
                        for r, t in targets.items()) +
              f"; runtime {elapsed:.1f} s")
    line = _report(capsys, "absolute-risk anchors", ok, detail)
    assert ok, line


def test_interpolation_threshold_properties(capsys):
    degenerate = FeatureMap(kind="Polynomial", r=0.0, gamma=2.0)
    star0 = solve_kappa_star(LOGI10, degenerate).kappa_star
    ok = abs(star0 - 0.5) <= 1e-6
    stars = []
    for model, fmap in SIX_CONFIGS:
        star = solve_kappa_star(model, fmap).kappa_star
        stars.append(star)
        ok = ok and 0.0 < star <= 0.5
        grid = np.linspace(0.01, 0.5, 50)
        g = np.array([threshold_g(model, fmap, float(k)) for k in grid])
        ok = ok and bool(np.all(np.diff(g) < 0.0))
    detail = (f"zero-signal kappa* = {star0:.8f}; six thresholds " +
              ", ".join(f"{s:.4f}" for s in stars) +
              " all in (0, 0.5] with strictly decreasing g on 50 points")
    line = _report(capsys, "degenerate threshold and monotonicity", ok, detail)
    assert ok, line


def test_closed_forms_match_generic_quadrature(capsys, rng):
    worst = {}
    # Threshold objective: mixture reduction versus tensor quadrature.
    ts = np.linspace(-2.5, 2.5, 20)
    worst["g"] = max(abs(threshold_objective(float(t), GM2_NOISE) -
                         threshold_objective_generic(float(t), GM2_NOISE))
                     for t in ts)
    # Margin profile eta.
    diffs = []
    for _ in range(20):
        q = float(rng.uniform(0.3, 5.0))
        rho = float(rng.uniform(-0.95, 0.95))
        kappa = float(rng.uniform(0.1, 2.0))
        diffs.append(abs(eta(q, rho, GM2, GM2_NOISE, kappa) -
                         eta_generic(q, rho, GM2_NOISE, kappa)))
    worst["eta"] = max(diffs)
    # Three-equation residuals.
    diffs = []
    for _ in range(20):
        mu = float(rng.uniform(0.2, 3.0))
        alpha = float(rng.uniform(0.3, 3.0))
        lam = float(rng.uniform(0.2, 3.0))
        kappa = float(rng.uniform(0.05, 0.45))
        a = ml_residuals(mu, alpha, lam, GM2, GM2_NOISE, kappa)
        b = ml_residuals_generic(mu, alpha, lam, GM2_NOISE, kappa)
        diffs.append(float(np.max(np.abs(a - b))))
    worst["ml"] = max(diffs)
    # Mixture risk: the closed normal tail against the noise quadrature.
    s, r = 1.0, 2.0
    v, w = v_nodes(GM2_NOISE, 96)
    diffs = []
    for _ in range(20):
        beta = rng.standard_normal(6)
        b1 = beta[0]
        ortho = float(np.linalg.norm(beta[1:]))
        closed = float(normal_tail(s * b1 / np.linalg.norm(beta)))
        generic = float(normal_tail(b1 * v / ortho) @ w)
        diffs.append(abs(closed - generic))
    worst["risk"] = max(diffs)
    ok = all(d <= 1e-6 for d in worst.values())
    detail = ("worst |closed - generic| on 20-point grids: " +
              ", ".join(f"{k} {v:.2e}" for k, v in worst.items()))
    line = _report(capsys, "dual-implementation oracles", ok, detail)
    assert ok, line


def test_solver_residual_certificates(capsys):
    worst_ml = 0.0
    init = (1.0, 1.0, 1.0)
    for kappa in (0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35):
        sol = solve_ml(LOGI10, POLY2, kappa, init=init)
        assert sol.converged
        worst_ml = max(worst_ml, float(np.max(np.abs(sol.residuals))))
        init = (sol.mu, sol.alpha, sol.lam)
    init = (1.0, 1.0, 1.0)
    for kappa in (0.05, 0.1, 0.15, 0.2, 0.25):
        sol = solve_ml(GM10, LIN3_GM, kappa, init=init)
        assert sol.converged
        worst_ml = max(worst_ml, float(np.max(np.abs(sol.residuals))))
        init = (sol.mu, sol.alpha, sol.lam)
    worst_eta = 0.0
    for kappa in (0.45, 0.8, 1.2, 1.7, 2.3):
        sol = solve_svm(LOGI10, POLY2, kappa)
        worst_eta = max(worst_eta, abs(sol.eta_at_solution))
    for kappa in (0.35, 0.8, 1.2, 1.7, 2.3):
        sol = solve_svm(GM10, LIN3_GM, kappa)
        worst_eta = max(worst_eta, abs(sol.eta_at_solution))
    ok = worst_ml <= 1e-6 and worst_eta <= 1e-8
    detail = (f"max |equation residual| {worst_ml:.2e} over 12 converged "
              f"triples (gate 1e-6); max |min-eta at q*| {worst_eta:.2e} "
              f"over 10 margins (gate 1e-8)")
    line = _report(capsys, "solver residual certificates", ok, detail)
    assert ok, line


def test_theory_matches_simulation(capsys):
    # Documented theory values double as a regression layer at 1e-3; the
    # Monte Carlo gates are 0.02 on risk and 0.03 on cosine per point.
    start = time.time()
    pins = [
        (LOGI10, POLY2, {0.1: (0.40465, 0.29987),
                         0.8: (0.35254, 0.45408),
                         1.5: (0.35078, 0.45911)}),
        (GM10, LIN3_GM, {0.1: (0.31613, 0.15133),
                         0.8: (0.12740, 0.36011),
                         1.5: (0.04792, 0.52664)}),
    ]
    worst_risk = worst_cos = 0.0
    ok = True
    for model, fmap, points in pins:
        kstar = kappa_star_cached(model, fmap)
        for kappa, (risk_pin, cos_pin) in points.items():
            s, _ = signal_strength(fmap, kappa)
            if kappa < kstar:
                sol = solve_ml(model, fmap, kappa)
                risk_th, cos_th, _ = ml_predictions(sol, model, s, fmap.r)
                method = "gd"
            else:
                sol = solve_svm(model, fmap, kappa)
                risk_th, cos_th, _, _ = svm_predictions(sol, model, s, fmap.r)
                method = "svm"
            ok = ok and abs(risk_th - risk_pin) <= 1e-3
            ok = ok and abs(cos_th - cos_pin) <= 1e-3
            agg = simulate_point(model, fmap, kappa, n=200, trials=200,
                                 seed=20260816, method=method, threads=1)
            dr = abs(agg["risk_sim_mean"] - risk_th)
            dc = abs(agg["cosine_sim_mean"] - cos_th)
            worst_risk = max(worst_risk, dr)
            worst_cos = max(worst_cos, dc)
            ok = ok and dr <= 0.02 and dc <= 0.03
    elapsed = time.time() - start
    ok = ok and elapsed <= 600.0
    detail = (f"6 points x 200 trials at n=200: worst |risk gap| "
              f"{worst_risk:.4f} (gate 0.02), worst |cosine gap| "
              f"{worst_cos:.4f} (gate 0.03); runtime {elapsed:.0f} s")
    line = _report(capsys, "theory versus simulation", ok, detail)
    assert ok, line


def test_separability_transition_sharpness(capsys):
    trials = 50
    fractions = {}
    ok = True
    for idx, (model, fmap) in enumerate([(LOGI10, POLY2), (GM10, LIN3_GM)]):
        kstar = kappa_star_cached(model, fmap)
        for side, sign in (("above", 1.0), ("below", -1.0)):
            kappa = kstar + sign * 0.1
            hits = sum(is_separable(generate(model, fmap, 400, kappa,
                                             seed=(900 + idx, t)))
                       for t in range(trials))
            frac = hits / trials
            fractions[f"{model.kind[:2]} {side}"] = frac
            ok = ok and (frac >= 0.9 if side == "above" else frac <= 0.1)
    detail = ("separable fraction at n=400, kappa* +/- 0.1: " +
              ", ".join(f"{k} {v:.2f}" for k, v in fractions.items()))
    line = _report(capsys, "phase-transition sharpness", ok, detail)
    assert ok, line


def test_gradient_descent_finds_max_margin(capsys):
    worst = 1.0
    for t in range(50):
        data = generate(LOGI10, POLY2, 50, 2.0, seed=(1000 + t, 0))
        gd = gd_logistic(data)
        svm = svm_train(data)
        assert gd.separable and svm.separable
        cos = float(gd.beta @ svm.beta /
                    (np.linalg.norm(gd.beta) * np.linalg.norm(svm.beta)))
        worst = min(worst, cos)
    ok = worst >= 0.999
    detail = (f"50 separable instances (n=50, p=100): worst direction "
              f"cosine {worst:.6f} (gate 0.999)")
    line = _report(capsys, "implicit-bias equivalence", ok, detail)
    assert ok, line


def test_double_descent_shape(capsys):
    checks = {}
    # Polynomial map, gamma = 5: theory curve on (0, 3].
    kstar5 = kappa_star_cached(LOGI10, POLY5)
    ml_grid = [float(k) for k in np.arange(0.05, kstar5 - 0.02, 0.02)]
    ml_risk = []
    init = (1.0, 1.0, 1.0)
    for kappa in ml_grid:
        sol = solve_ml(LOGI10, POLY5, kappa, init=init)
        s, _ = signal_strength(POLY5, kappa)
        ml_risk.append(ml_predictions(sol, LOGI10, s, 10.0)[0])
        init = (sol.mu, sol.alpha, sol.lam)
    ml_risk = np.array(ml_risk)
    interior = np.argmin(ml_risk)
    checks["local minimum below kappa*"] = bool(0 < interior < len(ml_risk) - 1)

    def svm_risk(fmap, kappa):
        sol = solve_svm(LOGI10, fmap, kappa)
        s, _ = signal_strength(fmap, kappa)
        return svm_predictions(sol, LOGI10, s, 10.0)[0], sol

    near, _ = svm_risk(POLY5, kstar5 + 0.01)
    after, _ = svm_risk(POLY5, kstar5 + 0.05)
    checks["second descent after kappa*"] = bool(after < near)

    svm_grid = [kstar5 + 0.011] + [float(k) for k in
                                   np.arange(0.35, 3.001, 0.05)]
    svm_vals = []
    qs = []
    for kappa in svm_grid:
        risk, sol = svm_risk(POLY5, kappa)
        svm_vals.append(risk)
        qs.append(np.sqrt(kappa) * sol.q_star)
    svm_vals = np.array(svm_vals)
    # The pinned expectation: for gamma = 5 the global minimum lies below the
    # threshold.  The computed curve disagrees: the overparametrized branch
    # dips lower shortly after kappa*, and matched finite-n simulation
    # reproduces the overparametrized value, so the claim fails honestly.
    checks["global minimum below kappa*"] = bool(
        ml_risk.min() < svm_vals.min())
    checks["sqrt(kappa) q* monotone decreasing"] = bool(
        np.all(np.diff(qs) < 0.0))

    # Linear map: the global minimum must sit above the threshold.
    kstar_lin = kappa_star_cached(LOGI10, LIN3_LOGI)
    lin_ml = []
    init = (1.0, 1.0, 1.0)
    for kappa in np.arange(0.05, kstar_lin - 0.02, 0.05):
        sol = solve_ml(LOGI10, LIN3_LOGI, float(kappa), init=init)
        s, _ = signal_strength(LIN3_LOGI, float(kappa))
        lin_ml.append(ml_predictions(sol, LOGI10, s, 10.0)[0])
        init = (sol.mu, sol.alpha, sol.lam)
    lin_svm = [svm_risk(LIN3_LOGI, float(k))[0]
               for k in np.arange(kstar_lin + 0.03, 3.001, 0.25)]
    checks["linear-map global minimum above kappa*"] = bool(
        min(lin_svm) < min(lin_ml))

    ok = all(checks.values())
    detail = ("; ".join(f"{k}: {'yes' if v else 'NO'}"
                        for k, v in checks.items()) +
              f"; gamma=5 minima: {ml_risk.min():.5f} below vs "
              f"{svm_vals.min():.5f} above kappa*={kstar5:.4f}")
    line = _report(capsys, "double-descent shape", ok, detail)
    assert ok, line

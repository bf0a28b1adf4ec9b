"""Tests for the max-margin asymptotics in the separable regime."""
import numpy as np
import pytest

from ddc.errors import NotInRegime
from ddc.feature_map import DataModelSpec, FeatureMap, noise_for, signal_strength
from ddc.gaussian_core import NoiseModelV, QuadratureSpec, normal_tail
from ddc.phase_transition import kappa_star_cached
from ddc.svm_solver import (
    SvmSolution,
    eta,
    eta_generic,
    eta_min_over_rho,
    solve_svm,
    svm_predictions,
)

LOGI10 = DataModelSpec(kind="Logistic", r=10.0)
POLY2 = FeatureMap(kind="Polynomial", r=10.0, gamma=2.0)
GM10 = DataModelSpec(kind="GaussianMixture", r=np.sqrt(10.0))
LIN3 = FeatureMap(kind="Linear", r=np.sqrt(10.0), zeta=3.0)
GM_NOISE = NoiseModelV(model="GmShifted", s=1.0, r=2.0)
GM_MODEL = DataModelSpec(kind="GaussianMixture", r=2.0)


class TestEta:
    def test_rho_zero_large_q_limit(self):
        # E(G - 1/q)_-^2 -> 1/2 as q -> inf
        val = eta(1e9, 0.0, GM_MODEL, GM_NOISE, 0.3)
        assert val == pytest.approx(0.5 - 0.3, abs=1e-8)

    def test_closed_form_at_centered_argument(self):
        # rho*s = 1/q makes the truncated second moment hit its m=0 value 1/2
        val = eta(2.0, 0.5, GM_MODEL, GM_NOISE, 0.4)
        assert val == pytest.approx(0.5 - 0.75 * 0.4, abs=1e-10)

    def test_gm_closed_form_matches_generic_quadrature(self, rng):
        quad = QuadratureSpec()
        for _ in range(20):
            q = float(rng.uniform(0.3, 5.0))
            rho = float(rng.uniform(-0.95, 0.95))
            kappa = float(rng.uniform(0.3, 1.5))
            a = eta(q, rho, GM_MODEL, GM_NOISE, kappa)
            b = eta_generic(q, rho, GM_NOISE, kappa, quad)
            assert a == pytest.approx(b, abs=1e-6)

    def test_logistic_path_matches_generic(self, rng):
        noise = NoiseModelV(model="LogisticGY", s=3.0, r=5.0)
        model = DataModelSpec(kind="Logistic", r=5.0)
        quad = QuadratureSpec()
        for _ in range(10):
            q = float(rng.uniform(0.3, 4.0))
            rho = float(rng.uniform(-0.9, 0.9))
            a = eta(q, rho, model, noise, 0.8)
            b = eta_generic(q, rho, noise, 0.8, quad)
            assert a == pytest.approx(b, abs=1e-6)

    def test_strictly_decreasing_in_q(self):
        for rho in np.linspace(-0.9, 0.9, 10):
            vals = [eta(float(q), float(rho), GM_MODEL, GM_NOISE, 0.5)
                    for q in np.linspace(0.2, 6.0, 20)]
            assert np.all(np.diff(vals) < 0)

    def test_eta_bar_strictly_decreasing(self):
        vals = [eta_min_over_rho(float(q), GM_NOISE, 0.5)[1]
                for q in np.linspace(0.2, 8.0, 50)]
        assert np.all(np.diff(vals) < 0)

    def test_inner_minimizer_grid_stability(self):
        for q in (0.8, 1.7, 3.0):
            r200, _ = eta_min_over_rho(q, GM_NOISE, 0.6, grid=200)
            r2000, _ = eta_min_over_rho(q, GM_NOISE, 0.6, grid=2000)
            assert abs(r200 - r2000) <= 1e-4


class TestSolveSvm:
    def test_solution_invariants(self):
        sol = solve_svm(LOGI10, POLY2, 0.8)
        assert isinstance(sol, SvmSolution)
        assert sol.q_star > 0
        assert -1.0 <= sol.rho_star <= 1.0
        assert abs(sol.eta_at_solution) <= 1e-8

    def test_eta_bar_recomputed_at_solution(self):
        sol = solve_svm(GM10, LIN3, 0.9)
        noise = noise_for(GM10, LIN3, 0.9)
        rho, val = eta_min_over_rho(sol.q_star, noise, 0.9)
        assert abs(val) <= 1e-8
        assert rho == pytest.approx(sol.rho_star, abs=1e-6)

    def test_not_in_regime_below_threshold(self):
        with pytest.raises(NotInRegime):
            solve_svm(LOGI10, POLY2, 0.2)
        with pytest.raises(NotInRegime):
            solve_svm(GM10, LIN3, kappa_star_cached(GM10, LIN3))

    def test_q_star_blows_up_at_threshold(self):
        ks = kappa_star_cached(LOGI10, POLY2)
        near = solve_svm(LOGI10, POLY2, ks + 0.01)
        far = solve_svm(LOGI10, POLY2, ks + 0.1)
        assert near.q_star > far.q_star

    def test_gm_risk_simplifies_to_tail_of_rho_s(self):
        sol = solve_svm(GM10, LIN3, 1.0)
        s, _ = signal_strength(LIN3, 1.0)
        risk, cosine, _, _ = svm_predictions(sol, GM10, s, float(GM10.r))
        assert risk == pytest.approx(normal_tail(sol.rho_star * s), abs=1e-8)
        assert cosine == pytest.approx(sol.rho_star * s / float(GM10.r), abs=1e-12)

    def test_theory_pins_logistic(self):
        sol = solve_svm(LOGI10, POLY2, 0.8)
        s, _ = signal_strength(POLY2, 0.8)
        risk, cosine, _, _ = svm_predictions(sol, LOGI10, s, 10.0)
        assert risk == pytest.approx(0.35254, abs=2e-4)
        assert cosine == pytest.approx(0.45408, abs=2e-4)

    def test_theory_pins_gm(self):
        sol = solve_svm(GM10, LIN3, 1.5)
        s, _ = signal_strength(LIN3, 1.5)
        risk, cosine, _, _ = svm_predictions(sol, GM10, s, float(GM10.r))
        assert risk == pytest.approx(0.04792, abs=2e-4)
        assert cosine == pytest.approx(0.52664, abs=2e-4)

    def test_normalized_margin_decreasing_in_kappa(self):
        ks = kappa_star_cached(LOGI10, POLY2)
        margins = []
        for kappa in np.linspace(ks + 0.05, 2.5, 8):
            sol = solve_svm(LOGI10, POLY2, float(kappa))
            margins.append(np.sqrt(kappa) * sol.q_star)
        assert np.all(np.diff(margins) < 0)


class TestSvmPredictions:
    def make(self, q, rho, kappa):
        return SvmSolution(q_star=q, rho_star=rho, eta_at_solution=0.0,
                           iterations=0, kappa=kappa)

    def test_uninformative_direction(self):
        risk, cosine, _, _ = svm_predictions(self.make(1.0, 0.0, 0.5),
                                             GM_MODEL, 1.0, 2.0)
        assert risk == pytest.approx(0.5, abs=1e-12)
        assert cosine == 0.0

    def test_aligned_direction_gm(self):
        risk, _, _, _ = svm_predictions(self.make(1.0, 1.0, 0.5),
                                        GM_MODEL, 1.3, 2.0)
        assert risk == pytest.approx(normal_tail(1.3), abs=1e-10)

    def test_tail_oracle_gm(self):
        risk, _, _, _ = svm_predictions(self.make(1.0, 0.6, 0.5),
                                        GM_MODEL, 2.0, 2.0)
        assert risk == pytest.approx(normal_tail(1.2), abs=1e-6)

    def test_normalized_margin_formula(self):
        sol = self.make(2.5, 0.4, 0.9)
        _, _, _, margin = svm_predictions(sol, GM_MODEL, 1.0, 2.0)
        assert margin == pytest.approx(np.sqrt(0.9) * 2.5, abs=1e-12)

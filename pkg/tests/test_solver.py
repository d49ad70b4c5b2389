import math

import numpy as np
import pytest

from ddestab.eqspec import CoefficientFn, DelayFn, EquationSpec
from ddestab.solver import (InitialValueProblem, IntegrationError,
                            default_step, estimate_decay,
                            first_order_positivity_probe,
                            fundamental_function, integrate,
                            integrate_first_order,
                            verify_variation_of_constants)


def ode32():
    return EquationSpec.pure_delay(3, 2)


def closed32(t):
    # x'' + 3x' + 2x = 0, x(0) = 0, x'(0) = 1
    return np.exp(-t) - np.exp(-2 * t)


class TestIntegrate:
    def test_undelayed_equation_matches_closed_form(self):
        ivp = InitialValueProblem(ode32(), x0=0.0, x0p=1.0, horizon=5.0)
        traj = integrate(ivp, step=1e-3)
        assert np.max(np.abs(traj.x - closed32(traj.t))) < 1e-6

    def test_zero_data_gives_zero_solution_exactly(self):
        spec = EquationSpec.pure_delay(3, 2, g=0.2, h=0.3)
        ivp = InitialValueProblem(spec, x0=0.0, x0p=0.0, horizon=3.0)
        traj = integrate(ivp, step=1e-2)
        assert np.all(traj.x == 0.0) and np.all(traj.xp == 0.0)

    def test_burton_equation_decays(self):
        spec = EquationSpec.pure_delay(1 / 3, 1 / 48, g="t", h=16)
        ivp = InitialValueProblem(spec, x0=1.0, x0p=0.0, horizon=600.0)
        traj = integrate(ivp)
        env = np.abs(traj.x) + np.abs(traj.xp)
        n = len(env)
        assert np.max(env[3 * n // 4:]) < np.max(env[: n // 4])
        assert np.max(np.abs(traj.x)) < 10.0  # bounded

    def test_convergence_order_is_four(self):
        errs = []
        for h in (1e-2, 1e-3):
            traj = integrate(InitialValueProblem(ode32(), x0=0.0, x0p=1.0,
                                                 horizon=5.0), step=h)
            errs.append(np.max(np.abs(traj.x - closed32(traj.t))))
        order = math.log10(errs[0] / errs[1])
        assert 3.5 <= order <= 4.5

    def test_linearity_superposition(self):
        spec = EquationSpec.pure_delay(3, 2, h=0.1)
        f1 = CoefficientFn.from_expression("sin(t)")
        f2 = CoefficientFn.from_expression("cos(2*t)")
        rng = np.random.default_rng(11)
        al, be = rng.uniform(-2, 2, 2)

        def run(x0, x0p, forcing):
            ivp = InitialValueProblem(spec, x0=x0, x0p=x0p, forcing=forcing,
                                      horizon=4.0)
            return integrate(ivp, step=5e-3)

        ta = run(1.0, 0.0, f1)
        tb = run(0.0, 1.0, f2)
        combo = run(al * 1.0, be * 1.0,
                    lambda t: al * f1(t) + be * f2(t))
        mix_x = al * ta.x + be * tb.x
        scale = np.max(np.abs(mix_x)) + 1.0
        assert np.max(np.abs(combo.x - mix_x)) / scale < 1e-8

    def test_interpolant_reproduces_nodes_exactly(self):
        ivp = InitialValueProblem(ode32(), x0=0.3, x0p=-0.2, horizon=2.0)
        traj = integrate(ivp, step=1e-2)
        for k in (0, 57, len(traj.t) - 1):
            assert traj.eval_x(traj.t[k]) == traj.x[k]
            assert traj.eval_xp(traj.t[k]) == traj.xp[k]

    def test_dense_output_is_c1_at_step_boundaries(self):
        spec = EquationSpec.pure_delay(3, 2, h=0.1)
        ivp = InitialValueProblem(spec, x0=1.0, x0p=0.0, horizon=2.0)
        traj = integrate(ivp, step=1e-2)
        eps = 1e-9
        for k in range(1, len(traj.t) - 1, 37):
            tk = traj.t[k]
            assert abs(traj.eval_xp(tk - eps) - traj.eval_xp(tk + eps)) < 1e-10

    def test_dense_output_accuracy_between_nodes(self):
        ivp = InitialValueProblem(ode32(), x0=0.0, x0p=1.0, horizon=3.0)
        traj = integrate(ivp, step=1e-2)
        us = np.linspace(0.0, 3.0, 997)
        xs, _ = traj.sample(us)
        assert np.max(np.abs(xs - closed32(us))) < 1e-8

    def test_history_functions_are_read(self):
        # with history x = 1, xp = 0 and matching initial data the constant
        # history enters through the delayed terms only
        spec = EquationSpec.pure_delay(3, 2, g=0.5, h=0.5)
        ivp = InitialValueProblem(spec, x0=1.0, x0p=0.0, horizon=1.0)
        traj = integrate(ivp, step=1e-3)
        # initial acceleration: -a psi(g(0)) - b phi(h(0)) = -0 - 2*1
        assert traj.xpp[0] == pytest.approx(-2.0)

    def test_vanishing_expression_lag_close_to_undelayed(self):
        spec = EquationSpec.pure_delay(
            3, 2, g="t - (0.001 + 0.0005*sin(t))", h="t - 0.001")
        ivp = InitialValueProblem(spec, x0=0.0, x0p=1.0, horizon=3.0)
        traj = integrate(ivp, step=1e-2)  # lag far below the step
        assert np.max(np.abs(traj.x - closed32(traj.t))) < 5e-3

    def test_future_delay_rejected(self):
        spec = EquationSpec.pure_delay(3, 2, g="t + 0.1*sin(t)", h=0.1)
        ivp = InitialValueProblem(spec, x0=1.0, x0p=0.0, horizon=8.0)
        with pytest.raises(IntegrationError, match="future"):
            integrate(ivp, step=1e-2)

    def test_horizon_must_exceed_t0(self):
        with pytest.raises(ValueError):
            InitialValueProblem(ode32(), horizon=0.0)

    def test_default_step_respects_min_lag(self):
        assert default_step(EquationSpec.pure_delay(3, 2, h=0.02)) == 0.005
        assert default_step(EquationSpec.pure_delay(3, 2, h=16)) == 1e-2
        assert default_step(ode32()) == 1e-2


class TestFundamentalFunction:
    def test_matches_closed_form_at_origin(self):
        X = fundamental_function(ode32(), 0.0, 5.0, step=1e-3)
        assert np.max(np.abs(X.x - closed32(X.t))) < 1e-6

    def test_initial_conditions(self):
        spec = EquationSpec.pure_delay(3, 2, g=0.1, h=0.2)
        X = fundamental_function(spec, 1.5, 3.0, step=1e-3)
        assert X.eval_x(1.5) == 0.0
        assert X.eval_xp(1.5) == 1.0
        assert X.eval_x(0.7) == 0.0  # zero before the start time

    def test_time_invariance_for_autonomous_specs(self):
        spec = EquationSpec.pure_delay(3, 2, g=0.15, h=0.3)
        base = fundamental_function(spec, 0.0, 6.0, step=2e-3)
        for s in (0.8, 2.3):
            shifted = fundamental_function(spec, s, s + 3.0, step=2e-3)
            us = np.linspace(0.0, 3.0, 301)
            xs_s, _ = shifted.sample(s + us)
            xs_b, _ = base.sample(us)
            assert np.max(np.abs(xs_s - xs_b)) < 1e-6

    def test_start_before_t0_rejected(self):
        with pytest.raises(ValueError):
            fundamental_function(EquationSpec.pure_delay(3, 2, t0=1.0), 0.5, 2.0)


class TestEstimateDecay:
    def test_pure_exponential(self):
        # x0 = 1, x0p = -1 excites only the e^{-t} mode of (3, 2)
        ivp = InitialValueProblem(ode32(), x0=1.0, x0p=-1.0, horizon=40.0)
        est = estimate_decay(integrate(ivp, step=1e-2))
        assert est.verdict == "decaying"
        assert est.lambda_hat == pytest.approx(1.0, abs=0.05)

    def test_dominant_root_of_the_comparison_equation(self):
        ivp = InitialValueProblem(ode32(), x0=0.0, x0p=1.0, horizon=40.0)
        est = estimate_decay(integrate(ivp, step=1e-2))
        assert est.verdict == "decaying"
        assert est.lambda_hat == pytest.approx(1.0, abs=0.05)

    def test_zero_trajectory_sentinel(self):
        ivp = InitialValueProblem(ode32(), x0=0.0, x0p=0.0, horizon=5.0)
        est = estimate_decay(integrate(ivp, step=1e-2))
        assert est.verdict == "decaying"
        assert math.isinf(est.lambda_hat)
        d = est.to_dict()
        assert d["lambda_unbounded"] is True and d["lambda_hat"] is None

    def test_burton_is_decaying_at_horizon_600(self):
        spec = EquationSpec.pure_delay(1 / 3, 1 / 48, g="t", h=16)
        ivp = InitialValueProblem(spec, x0=1.0, x0p=0.0, horizon=600.0)
        est = estimate_decay(integrate(ivp))
        assert est.verdict == "decaying"
        assert est.lambda_hat > 0.005

    def test_not_decaying_for_growing_solution(self):
        # negative damping, unstable
        spec = EquationSpec.pure_delay(-0.2, 1.0)
        ivp = InitialValueProblem(spec, x0=1.0, x0p=0.0, horizon=60.0)
        est = estimate_decay(integrate(ivp, step=1e-2))
        assert est.verdict == "not_decaying"

    def test_short_span_inconclusive(self):
        # slow decay over a short window cannot be certified
        spec = EquationSpec.pure_delay(3, 0.05)  # roots ~ -0.0168, -2.98
        ivp = InitialValueProblem(spec, x0=1.0, x0p=0.0, horizon=30.0)
        est = estimate_decay(integrate(ivp, step=1e-2))
        assert est.verdict == "inconclusive"


class TestVariationOfConstants:
    def test_zero_forcing_zero_residual(self):
        r = verify_variation_of_constants(ode32(), CoefficientFn.constant(0.0),
                                          T=2.0, step=1e-2)
        assert r == 0.0

    def test_constant_forcing_reconstruction(self):
        r = verify_variation_of_constants(ode32(), CoefficientFn.constant(1.0),
                                          T=4.0, step=1e-3)
        assert r < 1e-4

    def test_forced_solution_matches_closed_form(self):
        # x = 1/2 - e^{-t} + e^{-2t}/2 solves x'' + 3x' + 2x = 1, zero data
        ivp = InitialValueProblem(ode32(), forcing=CoefficientFn.constant(1.0),
                                  horizon=6.0)
        traj = integrate(ivp, step=1e-3)
        closed = 0.5 - np.exp(-traj.t) + 0.5 * np.exp(-2 * traj.t)
        assert np.max(np.abs(traj.x - closed)) < 1e-8
        assert traj.x[-1] == pytest.approx(0.5, abs=1e-2)  # steady state 1/b

    def test_delayed_equation_reconstruction(self):
        spec = EquationSpec.pure_delay(3, 2, h=0.1)
        f = CoefficientFn.from_expression("sin(t)")
        r = verify_variation_of_constants(spec, f, T=4.0, step=1e-3)
        assert r < 1e-3

    def test_odd_panel_count_rejected(self):
        with pytest.raises(ValueError):
            verify_variation_of_constants(ode32(), None, T=2.0, n_panels=7)


class TestFirstOrderKernel:
    def test_positive_within_certified_region(self):
        # a delta = 0.3 <= 1/e certifies positivity; the probe agrees
        assert first_order_positivity_probe(
            CoefficientFn.constant(3.0), DelayFn.constant_lag(0.1), T=30.0)

    def test_zero_coefficient_kernel_is_constant_one(self):
        ts, zs = integrate_first_order(CoefficientFn.constant(0.0),
                                       DelayFn.constant_lag(1.0), 0.0, 10.0,
                                       step=1e-2)
        assert np.all(zs == 1.0)

    def test_large_lag_oscillates(self):
        # a delta = 3 >> 1/e: the kernel of z' + 3 z(t-1) = 0 oscillates
        assert not first_order_positivity_probe(
            CoefficientFn.constant(3.0), DelayFn.constant_lag(1.0), T=30.0)

    def test_undelayed_kernel_is_exponential(self):
        ts, zs = integrate_first_order(CoefficientFn.constant(2.0),
                                       DelayFn.identity(), 0.0, 5.0, step=1e-3)
        assert np.max(np.abs(zs - np.exp(-2.0 * ts))) < 1e-9


class TestTrajectoryExport:
    def test_csv_columns(self, tmp_path):
        ivp = InitialValueProblem(ode32(), x0=0.0, x0p=1.0, horizon=1.0)
        traj = integrate(ivp, step=0.1)
        path = tmp_path / "traj.csv"
        traj.to_csv(path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "t,x,dx"
        assert len(lines) == len(traj.t) + 1
        t0, x0, dx0 = lines[1].split(",")
        assert float(t0) == 0.0 and float(x0) == 0.0 and float(dx0) == 1.0

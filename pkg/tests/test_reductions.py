import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tfks import frac_ops
from tfks import reductions as R
from tfks.errors import FormalIdentityRefusal, RegimeError, ValidationError
from tfks.frac_ops import TimeSeries
from tfks.model import GridSpec, ModelParams, residual_gauged, residual_original

LINEAR = ModelParams(alpha=0.7, lam=0.5, chi=0.0, r=0.0)


class TestCases:
    def test_parse(self):
        assert R.parse_case("II.B") is R.CaseTag.SteadyState
        assert R.parse_case("SimilarityScaling") is R.CaseTag.SimilarityScaling
        with pytest.raises(ValidationError):
            R.parse_case("IV")

    def test_regime_guard_names_constraint(self):
        with pytest.raises(RegimeError, match="lam == 0") as info:
            R.reduce("II.B", ModelParams(lam=0.3))
        assert info.value.constraint == "lam == 0"
        with pytest.raises(RegimeError, match="chi == 0"):
            R.reduce("III.A", ModelParams())

    def test_negative_speed(self):
        with pytest.raises(ValidationError):
            R.ReductionCase(R.CaseTag.TravelingWave, speed=-1.0)

    def test_generic_record(self):
        rec = R.reduce("I", ModelParams(alpha=0.8, lam=0.5, r=1.0, K0=2.0, kappa=1.0, tau_c=1.0))
        assert rec.invariant == "t"
        assert rec.equations[0] == "D_t^0.8 v = 1 v - 0.5 exp(-0.5 t) v^2"
        assert rec.equations[1] == "1 w' = -0.5 w + v"
        assert dict(rec.coefficients)["w_rate"] == -0.5

    def test_lam_zero_generic_equals_untempered(self):
        p = ModelParams(lam=0.0)
        a, b = R.reduce("I", p), R.reduce("II.A", p)
        assert a == b and a.case is not b.case
        assert "exp" not in a.equations[0]
        assert dict(a.coefficients)["w_rate"] == -p.kappa

    def test_similarity_caveat(self):
        rec = R.reduce("III.B", LINEAR.with_(D_c=0.0))
        assert any("does not automatically become an ordinary differential equation" in c
                   for c in rec.caveats)
        assert "not closed" not in rec.equations[1]
        assert "not closed" in R.reduce("III.B", LINEAR).equations[1]
        assert "caveat:" in rec.to_text()


class TestLogistic:
    def test_fixed_point(self):
        p = ModelParams(lam=0.0, K0=3.0)
        sol = R.solve_fractional_logistic(p, 3.0, 5.0, 1e-2)
        assert np.max(np.abs(sol.values - 3.0)) < 1e-12

    def test_mittag_leffler_oracle(self):
        p = ModelParams(alpha=0.8, lam=0.0, r=1.0, K0=1e12)
        sol = R.solve_fractional_logistic(p, 1.0, 1.0, 1e-3)
        ref = np.array([frac_ops.mittag_leffler(0.8, t ** 0.8) for t in sol.times])
        assert np.max(np.abs(sol.values - ref) / ref) < 1e-4

    def test_classical_logistic(self):
        p = ModelParams(alpha=1.0, lam=0.0, r=1.0, K0=2.0)
        sol = R.solve_fractional_logistic(p, 0.5, 1.0, 1e-4)
        t = sol.times
        ref = 2.0 * 0.5 / (0.5 + 1.5 * np.exp(-t))
        assert np.max(np.abs(sol.values - ref) / ref) < 1e-6

    @pytest.mark.parametrize("alpha", [0.6, 0.8, 1.0])
    def test_approach_to_capacity(self, alpha):
        p = ModelParams(alpha=alpha, lam=0.0, r=1.0, K0=2.0)
        sol = R.solve_fractional_logistic(p, 0.5, 50.0, 1e-2)
        assert np.all(np.diff(sol.values) >= -1e-12)
        assert abs(sol.values[-1] - 2.0) < 0.05 * 2.0

    def test_alpha_above_one_with_slope(self):
        p = ModelParams(alpha=1.5, lam=0.0, r=0.0, K0=math.inf)
        sol = R.solve_fractional_logistic(p, 1.0, 1.0, 1e-2, slope0=2.0)
        assert np.allclose(sol.values, 1.0 + 2.0 * sol.times, atol=1e-12)

    def test_blowup(self):
        p = ModelParams(alpha=1.0, lam=0.0, r=1.0, K0=1.0)
        with pytest.raises(Exception) as info:
            R.solve_fractional_logistic(p, -5.0, 10.0, 1e-2)
        assert "exceeded" in str(info.value)


class TestWOde:
    def test_constant_source(self):
        p = ModelParams(lam=0.5, kappa=1.0, tau_c=1.0)
        errs = []
        for dt in (1e-2, 5e-3):
            v = TimeSeries(0.0, dt, np.full(int(round(2 / dt)) + 1, 1.0))
            w = R.solve_w_ode(v, p, 3.0)
            t = v.times
            ref = 1.0 * np.exp(-0.5 * t) + 2.0
            errs.append(np.max(np.abs(w.values - ref)))
        assert max(errs) < 1e-13

    def test_trivial_cases(self):
        p = ModelParams(lam=0.0, kappa=0.5, K0=2.0)
        zero = R.solve_w_ode(TimeSeries(0.0, 0.1, np.zeros(11)), p, 0.0)
        assert np.all(zero.values == 0)
        eq = R.solve_w_ode(TimeSeries(0.0, 0.1, np.full(11, 2.0)), p, 4.0)
        assert np.max(np.abs(eq.values - 4.0)) < 1e-14

    def test_second_order(self):
        p = ModelParams(lam=0.3, kappa=1.0, tau_c=2.0)
        errs = []
        for n in (50, 100, 200):
            dt = 1.0 / n
            t = dt * np.arange(n + 1)
            # w = sin t solves tau_c w' = (tau_c lam - kappa) w + v for this v
            v = p.tau_c * np.cos(t) - p.gauged_decay * np.sin(t)
            w = R.solve_w_ode(TimeSeries(0.0, dt, v), p, 0.0)
            errs.append(np.max(np.abs(w.values - np.sin(t))))
        assert math.log2(errs[1] / errs[2]) > 1.8


class TestExact:
    def test_values(self):
        ex = R.exact_linear_solution(R.ExactLinearSolution(1.0, 1.0, ModelParams(lam=0.5, chi=0, r=0)))
        assert float(ex.u(0.0)) == 1.0
        assert math.isclose(float(ex.c(0.0)), 3.0, rel_tol=1e-15)

    def test_zero_amplitude(self):
        p = ModelParams(lam=0.5, chi=0, r=0, kappa=1.0, tau_c=4.0)
        ex = R.exact_linear_solution(R.ExactLinearSolution(0.0, 1.5, p))
        t = np.linspace(0, 3, 7)
        assert np.all(ex.u(t) == 0)
        assert np.allclose(ex.c(t), 1.5 * np.exp(-0.25 * t), rtol=1e-15)

    def test_invariants(self):
        with pytest.raises(RegimeError):
            R.ExactLinearSolution(1.0, 1.0, ModelParams())
        with pytest.raises(RegimeError):
            R.ExactLinearSolution(1.0, 1.0, ModelParams(chi=0, r=0, lam=1.0, kappa=1.0, tau_c=1.0))

    def test_residuals(self):
        ex = R.exact_linear_solution(R.ExactLinearSolution(1.0, 1.0, LINEAR))
        g = GridSpec(nx=32, nt=201)
        assert residual_gauged(ex.trajectory(g, "gauged"), LINEAR).sup_total < 1e-10
        for mode in ("local", "nonlocal"):
            assert residual_original(ex.trajectory(g), LINEAR, mode).sup_total < 1e-8

    def test_frames_consistent(self):
        from tfks.model import from_gauged, to_gauged
        ex = R.exact_linear_solution(R.ExactLinearSolution(1.0, 1.0, LINEAR))
        g = GridSpec(nx=8, nt=21)
        orig = ex.trajectory(g)
        gauged = ex.trajectory(g, "gauged")
        assert np.allclose(to_gauged(orig, LINEAR.lam).first, gauged.first, rtol=1e-14)
        assert np.allclose(from_gauged(gauged, LINEAR.lam).second, orig.second, rtol=1e-13)


class TestSteadyState:
    P = ModelParams(lam=0.0, chi=0.1, K0=2.0, kappa=0.5)

    def test_perturbed_constant(self):
        g = GridSpec(x0=0.0, x1=10.0, nx=200, boundary="neumann")
        rng = np.random.default_rng(0)
        gv = 2.0 * (1 + 0.01 * rng.standard_normal(200))
        gw = 4.0 * (1 + 0.01 * rng.standard_normal(200))
        res = R.solve_steady_state(self.P, g, gv, gw)
        assert res.residual < 1e-10 and res.iterations <= 8
        assert np.allclose(res.V, 2.0, atol=1e-8) and np.allclose(res.W, 4.0, atol=1e-8)

    def test_trivial_root(self):
        g = GridSpec(nx=32)
        res = R.solve_steady_state(self.P, g, np.zeros(32), np.zeros(32))
        assert res.residual == 0.0 and np.all(res.V == 0)

    def test_sinusoid_short_domain(self):
        g = GridSpec(x0=0.0, x1=1.0, nx=50, boundary="neumann")
        x = g.x
        res = R.solve_steady_state(self.P, g, 2 + 0.1 * np.cos(np.pi * x), 4 + 0.1 * np.cos(np.pi * x))
        assert res.residual < 1e-10

    def test_regime(self):
        with pytest.raises(RegimeError):
            R.solve_steady_state(ModelParams(lam=0.3), GridSpec(nx=8), np.ones(8), np.ones(8))


class TestTravelingWave:
    P = ModelParams(alpha=1.0, lam=0.0, chi=0.2, K0=2.0, kappa=0.5)

    def test_zero_speed_matches_steady_state(self):
        tw = R.build_traveling_wave(self.P, 0.0, formal=True)
        a = R.SpatialSystem(self.P, 40, 0.1, "periodic", speed=0.0)
        b = R.SpatialSystem(self.P, 40, 0.1, "periodic")
        V, W = np.linspace(1, 2, 40), np.linspace(2, 3, 40)
        diff = (a.jacobian(V, W) - b.jacobian(V, W)).toarray()
        assert np.max(np.abs(diff)) <= 1e-14
        g = GridSpec(nx=40, x0=0, x1=4.0)
        sol = tw.solver(g, np.full(40, 2.02), np.full(40, 3.9))
        assert np.allclose(sol.V, 2.0, atol=1e-8)

    def test_small_speed_limit(self):
        V, W = np.linspace(1, 2, 40), np.linspace(2, 3, 40)
        base = R.SpatialSystem(self.P, 40, 0.1, "periodic").jacobian(V, W).toarray()
        gaps = [np.max(np.abs(R.SpatialSystem(self.P, 40, 0.1, "periodic", speed=a).jacobian(V, W).toarray() - base))
                for a in (1e-2, 1e-4)]
        assert gaps[1] < gaps[0] / 50

    @given(a=st.floats(0, 5))
    @settings(max_examples=10)
    def test_constant_profiles(self, a):
        p = self.P.with_(alpha=0.7)
        rec = R.build_traveling_wave(p, a)
        const = lambda K: (lambda s: K + 0.0 * s)
        e1, e2 = rec.evaluator(const(2.0), const(4.0), np.linspace(0, 1, 5), 1.0, 21)
        assert np.max(np.abs(e1)) < 1e-12 and np.max(np.abs(e2)) < 1e-12
        f1, f2 = R.build_traveling_wave(p, a, formal=True).evaluator(np.full(16, 2.0), np.full(16, 4.0), 0.1)
        assert np.max(np.abs(f1)) < 1e-12 and np.max(np.abs(f2)) < 1e-12

    def test_refusal(self):
        rec = R.build_traveling_wave(self.P.with_(alpha=0.7), 1.0, formal=True)
        assert rec.caveats == (R.TRAVELING_WAVE_CAVEAT,)
        with pytest.raises(FormalIdentityRefusal, match="formal identity not validated"):
            rec.solver(GridSpec(nx=16), np.ones(16), np.ones(16))
        res = rec.evaluator(np.linspace(1, 2, 16), np.ones(16), 0.1)
        assert np.iscomplexobj(res[0])
        assert "history dependent" in rec.caveats[0]

    def test_evaluator_matches_reconstruction(self):
        p = self.P.with_(alpha=0.7)
        a = 0.5
        V = lambda s: 1.5 + 0.3 * np.sin(s)
        W = lambda s: 3.0 + 0.2 * np.cos(s)
        g = GridSpec(nx=64, nt=201)
        e1, _ = R.build_traveling_wave(p, a).evaluator(V, W, g.x, g.T, g.nt)
        recon = R.reconstructed_residual(p, g, V, W, a)
        assert np.all(np.isfinite(e1)) and np.max(np.abs(e1)) > 1e-3
        assert np.max(np.abs(e1 - recon)) < 5e-3

    def test_lambda_guard(self):
        with pytest.raises(RegimeError):
            R.build_traveling_wave(ModelParams(lam=0.2), 1.0)


class TestSimilarity:
    P = ModelParams(alpha=0.7, lam=0.5, chi=0.0, r=0.0, D_c=0.0, kappa=1.0, tau_c=1.0)
    Z = np.linspace(-3, 3, 61)

    def test_constant_and_zero(self):
        W = R.solve_similarity_w(lambda z: 2.0 + 0 * z, self.P, self.Z)
        assert np.allclose(W, -2.0 / self.P.gauged_decay, atol=1e-12)
        assert np.all(R.solve_similarity_w(lambda z: 0 * z, self.P, self.Z) == 0)

    def test_quadratic_substitution(self):
        p = self.P
        W = R.solve_similarity_w(lambda z: z * z, p, self.Z)
        dW = np.gradient(W, self.Z, edge_order=2)
        # W = zeta^2 / kappa solves the ODE exactly
        exact = self.Z ** 2 / (p.tau_c * p.lam - p.gauged_decay)
        assert np.max(np.abs(W - exact)) < 1e-8
        res = 0.5 * p.tau_c * p.lam * self.Z * dW - (p.gauged_decay * W + self.Z ** 2)
        assert np.max(np.abs(res[2:-2])) < 1e-8

    @pytest.mark.parametrize("s", [2.0, -3.0])
    def test_linearity(self, s):
        V = lambda z: np.cos(z) + 0.1 * z
        W1 = R.solve_similarity_w(V, self.P, self.Z)
        Ws = R.solve_similarity_w(lambda z: s * V(z), self.P, self.Z)
        assert np.max(np.abs(Ws - s * W1)) < 1e-12

    def test_guards(self):
        with pytest.raises(RegimeError):
            R.solve_similarity_w(np.cos, self.P.with_(D_c=1.0), self.Z)
        with pytest.raises(RegimeError):
            R.solve_similarity_w(np.cos, self.P.with_(kappa=0.5), self.Z)
        with pytest.raises(ValidationError):
            R.solve_similarity_w(lambda z: 1 / z, self.P, self.Z)
        with pytest.raises(ValidationError):
            R.solve_similarity_w(np.cos, self.P, self.Z[::-1])

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tfks import lie
from tfks import symcheck as S
from tfks.errors import DomainExitError, RegimeError, ValidationError
from tfks.model import GridSpec, ModelParams, Trajectory, residual_gauged, sample_fields
from tfks.pde_solver import solve_gauged


def smooth(nx=32, nt=21, boundary="periodic", x1=2 * math.pi):
    g = GridSpec(x0=0.0, x1=x1, nx=nx, nt=nt, boundary=boundary)
    return sample_fields(g, lambda t, x: 1 + 0.3 * np.sin(x) * np.exp(-t),
                         lambda t, x: 0.5 + 0.1 * np.cos(2 * x) + 0 * t, "gauged")


def test_flowspec_validation():
    with pytest.raises(ValidationError):
        S.FlowSpec(lie.DX, 1.0, interpolation="linear")
    with pytest.raises(ValidationError):
        S.FlowSpec(lie.Generator(phi_C=1.0), 1.0)
    with pytest.raises(ValidationError):
        S.FlowSpec(lie.DX, math.inf)


def test_map_x():
    f = S.FlowSpec(lie.time_scaling(1.0), 2.0)
    assert np.isclose(f.map_x(1.0), math.exp(-1.0))
    assert np.isclose(S.FlowSpec(lie.DX, 0.5).map_x(1.0), 1.5)
    assert f.time_shift == 2.0


@pytest.mark.parametrize("mode", S.INTERPOLATIONS)
def test_identity(mode):
    traj = smooth()
    out = S.apply_group(traj, S.FlowSpec(lie.time_scaling(0.5), 0.0, mode))
    assert np.array_equal(out.first, traj.first)


@given(m=st.integers(-40, 40))
def test_whole_cell_is_roll(m):
    traj = smooth()
    out = S.apply_group(traj, S.FlowSpec(lie.DX, m * traj.grid.dx))
    assert np.array_equal(out.first, np.roll(traj.first, m, axis=1))
    assert np.array_equal(out.second, np.roll(traj.second, m, axis=1))


@settings(max_examples=20)
@given(a=st.integers(-10, 10), b=st.integers(-10, 10))
def test_group_property_whole_cell(a, b):
    traj = smooth()
    dx = traj.grid.dx
    two = S.apply_group(S.apply_group(traj, S.FlowSpec(lie.DX, a * dx)), S.FlowSpec(lie.DX, b * dx))
    one = S.apply_group(traj, S.FlowSpec(lie.DX, (a + b) * dx))
    assert np.array_equal(two.first, one.first)


@settings(max_examples=20)
@given(e1=st.floats(-1, 1), e2=st.floats(-1, 1))
def test_group_property_cubic(e1, e2):
    traj = smooth(nx=256, nt=3)
    f = lambda e: S.FlowSpec(lie.DX, e, "cubic")
    two = S.apply_group(S.apply_group(traj, f(e1)), f(e2))
    one = S.apply_group(traj, f(e1 + e2))
    assert np.max(np.abs(two.first - one.first)) < 1e-4
    back = S.apply_group(S.apply_group(traj, f(e1)), f(-e1))
    assert np.max(np.abs(back.first - traj.first)) < 1e-4


def test_dilation_cubic_accuracy():
    # x-independent profile in t, quadratic in x on a bounded grid: check the preimage map
    g = GridSpec(x0=-1.0, x1=1.0, nx=201, nt=3, boundary="neumann")
    traj = sample_fields(g, lambda t, x: x * x + 0 * t, lambda t, x: 0 * x + 0 * t, "gauged")
    X = lie.Generator(xi_c1=1.0)
    out = S.apply_group(traj, S.FlowSpec(X, math.log(2.0), "cubic"))
    assert np.max(np.abs(out.first - (g.x / 2) ** 2)) < 1e-4


def test_domain_exit():
    traj = smooth(boundary="neumann", x1=1.0, nx=11)
    with pytest.raises(DomainExitError):
        S.apply_group(traj, S.FlowSpec(lie.DX, 0.5, "cubic"))


def test_whole_cell_needs_whole_cells():
    with pytest.raises(ValidationError):
        S.apply_group(smooth(), S.FlowSpec(lie.DX, 0.01))


class TestTimeShifts:
    def test_forward_keeps_history(self):
        traj = smooth(nt=21)
        out = S.apply_group(traj, S.FlowSpec(lie.DT, 0.25))
        assert out.grid.nt == 16 and math.isclose(out.grid.t0, 0.25)
        assert np.array_equal(out.first, traj.first[:16])

    def test_backward_truncates_memory(self):
        traj = smooth(nt=21)
        out = S.apply_group(traj, S.FlowSpec(lie.DT, -0.25))
        assert out.grid.nt == 16 and out.grid.t0 == 0.0
        assert np.array_equal(out.first, traj.first[5:])

    def test_conventions_differ_for_memory(self):
        p = ModelParams(alpha=0.6, lam=0.0)
        g = GridSpec(nx=16, nt=101)
        traj = solve_gauged(p, g, 1 + 0.2 * np.cos(g.x), np.ones(16))
        fwd = S.invariance_residual(traj, S.FlowSpec(lie.DT, 0.2), p)
        bwd = S.invariance_residual(traj, S.FlowSpec(lie.DT, -0.2), p)
        base = residual_gauged(traj, p).sup_total
        # relabelling the clock only removes tail rows
        assert fwd[0] <= base + 1e-12
        assert bwd[0] > 3 * base

    def test_not_multiple_of_dt(self):
        with pytest.raises(ValidationError):
            S.apply_group(smooth(nt=21), S.FlowSpec(lie.DT, 0.033))

    def test_too_long(self):
        with pytest.raises(DomainExitError):
            S.apply_group(smooth(nt=21), S.FlowSpec(lie.DT, 1.0))


def test_whole_cell_shift_preserves_residual():
    p = ModelParams()
    g = GridSpec(nx=32, nt=101)
    traj = solve_gauged(p, g, 1 + 0.2 * np.cos(g.x), np.ones(32))
    base = residual_gauged(traj, p)
    sup, l2 = S.invariance_residual(traj, S.FlowSpec(lie.DX, 5 * g.dx), p)
    assert abs(sup - base.sup_total) < 1e-10 and abs(l2 - base.l2_total) < 1e-10


@pytest.fixture(scope="module")
def table():
    return {reg: [S.run_study(s) for s in S.standard_studies(reg)]
            for reg in ("generic", "untempered", "chi0-r0")}


def test_table_generic(table):
    dx_row, dt_row = table["generic"]
    assert dx_row.passed and dx_row.expected
    assert not dt_row.passed and not dt_row.expected and dt_row.ratio > S.DECAY_RATIO


def test_table_untempered(table):
    assert all(r.passed and r.expected for r in table["untempered"])


def test_table_chi0(table):
    dx_row, xt_row, dt_row = table["chi0-r0"]
    assert dx_row.agrees and xt_row.agrees and xt_row.expected
    # the linear gauged system is autonomous, so d/dt passes numerically
    assert dt_row.passed and not dt_row.expected and dt_row.setup.note


def test_table_rendering(table):
    rows = [r for rs in table.values() for r in rs]
    text = S.table_csv(rows)
    assert text.splitlines()[0] == ",".join(S.TABLE_COLUMNS)
    assert len(text.splitlines()) == 1 + len(rows)
    assert "PASS" in S.table_text(rows)


def test_x_dependent_data_stalls_for_time_scaling():
    p = S.regime_params("chi0-r0")
    setup = S.StudySetup("X_t", "chi0-r0", p, lie.time_scaling(p.lam), 0.1,
                         lambda x: 1 + 0.2 * np.cos(x), lambda x: 0.5 + 0 * x, interpolation="cubic")
    assert S.run_study(setup).ratio > S.DECAY_RATIO


def test_regime_membership():
    with pytest.raises(RegimeError):
        S.standard_studies("untempered", ModelParams())
    with pytest.raises(ValidationError):
        S.standard_studies("generic", levels=(11, 21))

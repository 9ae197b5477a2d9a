import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from tfks import stencils
from tfks.errors import ValidationError

finite = st.floats(-10, 10, allow_nan=False)


@pytest.mark.parametrize("bc", stencils.BOUNDARIES)
@given(u=arrays(float, st.integers(5, 20), elements=finite))
def test_matrices_match_pointwise_operators(bc, u):
    n, dx = u.size, 0.3
    assert np.allclose(stencils.d1_matrix(n, dx, bc) @ u, stencils.d1(u, dx, bc), atol=1e-12)
    assert np.allclose(stencils.d2_matrix(n, dx, bc) @ u, stencils.d2(u, dx, bc), atol=1e-11)


def test_periodic_second_difference_of_cosine():
    n = 64
    dx = 2 * np.pi / n
    x = dx * np.arange(n)
    lam_h = (2 - 2 * np.cos(dx)) / dx ** 2
    assert np.allclose(stencils.d2(np.cos(x), dx, "periodic"), -lam_h * np.cos(x), atol=1e-12)


def test_neumann_ghost_reflection_kills_constant_and_edge_slope():
    u = np.array([1.0, 1.0, 1.0, 1.0, 1.0])
    assert np.all(stencils.d2(u, 0.1, "neumann") == 0)
    assert stencils.d1(np.arange(5.0) ** 2, 0.1, "neumann")[0] == 0


def test_unknown_boundary():
    with pytest.raises(ValidationError):
        stencils.d1(np.zeros(5), 0.1, "robin")


def test_fornberg_reproduces_textbook_weights():
    w = stencils.fornberg_weights(0.0, np.array([-1.0, 0.0, 1.0]), 2)
    assert np.allclose(w[:, 1], [-0.5, 0.0, 0.5])
    assert np.allclose(w[:, 2], [1.0, -2.0, 1.0])


def test_time_derivative_is_exact_on_degree_eight_polynomials():
    t = np.linspace(0, 1, 30)
    dt = t[1] - t[0]
    f = 3 * t ** 8 - t ** 5 + 2 * t
    df = 24 * t ** 7 - 5 * t ** 4 + 2
    assert np.max(np.abs(stencils.time_derivative(f, dt) - df)) < 1e-8


def test_time_derivative_short_series_and_axis():
    vals = np.stack([np.arange(3.0), 2 * np.arange(3.0)], axis=1)
    out = stencils.time_derivative(vals, 0.5)
    assert np.allclose(out, [[2.0, 4.0]] * 3)

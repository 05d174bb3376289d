import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bcinverse.forward import (
    control_apply,
    control_invert,
    control_matrix,
    response_function,
    wave_solve,
)
from bcinverse.goursat import goursat_fd_oracle, solve_goursat_picard
from bcinverse.grids import cumulative_trapezoid

from conftest import sample, sine


def test_zero_potential_response_is_exactly_zero():
    r = response_function(sample(np.zeros_like), 1.0)
    assert np.all(r.values == 0.0)
    assert r.grid.n_points == 401


def test_response_starts_at_minus_half_q0(r_one, r_sine):
    assert r_one.values[0] == pytest.approx(-0.5)
    assert r_sine.values[0] == pytest.approx(-0.25)


def test_constant_potential_series(r_one):
    # r(t) = -1/2 + t^2/16 + O(t^4) for q = 1
    t = r_one.t[:40]
    np.testing.assert_allclose(r_one.values[:40], -0.5 + t**2 / 16, atol=2e-4)


def test_response_against_fd_normal_derivative(q_sine, r_sine):
    fd = goursat_fd_oracle(q_sine, 1.0, q_sine.grid.h)
    h = fd.h
    k = np.arange(2, 2 * fd.n - 1)
    # w_x(0, t) from one-sided differences on the FD kernel (v = w on lattice)
    m = np.arange(3)
    w = np.array([fd.values[np.clip(kk - m, 0, None), kk + m] for kk in k])
    wx = (-3 * w[:, 0] + 4 * w[:, 1] - w[:, 2]) / (2 * h)
    wx_half = wx[::2]
    r_half = r_sine.values[k][::2]
    assert np.max(np.abs(wx_half - r_half)) < 2e-3


def test_wave_solve_boundary_and_causality(q_sine):
    n = 200
    t = np.linspace(0, 1, n + 1)
    f = np.sin(3 * t) * t
    u = wave_solve(q_sine, f, 1.0).values
    np.testing.assert_allclose(u[0], f, atol=1e-14)
    assert np.all(np.triu(u.T, 1) == 0)


def test_wave_solve_rejects_nonzero_start(q_sine):
    with pytest.raises(ValueError):
        wave_solve(q_sine, np.ones(201), 1.0)


def test_control_apply_is_final_slice_of_wave(q_sine):
    t = np.linspace(0, 1, 201)
    f = t * (1 - t) ** 2
    u = wave_solve(q_sine, f, 1.0).values
    z = control_apply(q_sine, f, 1.0)
    np.testing.assert_allclose(z, u[:, -1], atol=1e-12)


@settings(max_examples=15, deadline=None)
@given(coef=st.lists(st.floats(-2, 2), min_size=3, max_size=6))
def test_control_round_trip(coef):
    q = sample(sine, n_points=101)
    k = solve_goursat_picard(q, 1.0)
    x = np.linspace(0, 1, 101)
    z = np.polynomial.polynomial.polyval(x, coef)
    f, res = control_invert(q, z, 1.0, kernel=k, return_residual=True)
    assert res < 1e-10 * max(1.0, np.max(np.abs(z)))
    np.testing.assert_allclose(control_apply(q, f, 1.0, kernel=k), z, atol=1e-10)


def test_control_matrix_identity_for_zero_potential():
    k = solve_goursat_picard(sample(np.zeros_like, n_points=11), 1.0)
    M = control_matrix(k)
    assert np.array_equal(M, np.eye(11)[::-1])


def test_response_integral_is_cumulative_kernel_diagonal_trace(kernel_one, r_one):
    # d/dx w(x, x) = -q(x)/2 equals r(0) at x = 0
    assert r_one.values[0] == pytest.approx((kernel_one.w(1, 1) - kernel_one.w(0, 0)) / kernel_one.h,
                                            rel=1e-2)

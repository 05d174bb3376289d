import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from bcinverse.connecting import (
    apply_connecting,
    build_connecting_kernel,
    build_p,
    positivity_margin,
    symmetric_form,
)
from bcinverse.forward import control_matrix
from bcinverse.grids import ResponseSample, trapezoid_weights


def test_zero_response_gives_zero_kernel():
    ck = build_connecting_kernel(ResponseSample.from_values(np.zeros(41), 1.0))
    assert np.all(ck.matrix == 0)
    rep = positivity_margin(ck)
    assert rep.min_eig == pytest.approx(1.0)
    assert rep.positive


def test_constant_response_closed_form():
    # r = c: p(t) = c|t|/2, c^T(t, s) = c (2T - t - s - |t - s|) / 2 = c (T - max(t, s))
    c = 0.7
    ck = build_connecting_kernel(ResponseSample.from_values(np.full(81, c), 1.0))
    t = ck.grid.x
    np.testing.assert_allclose(ck.matrix, c * (1 - np.maximum.outer(t, t)), atol=1e-13)


@settings(max_examples=25, deadline=None)
@given(arrays(np.float64, st.integers(2, 20).map(lambda k: 2 * k + 1),
              elements=st.floats(-5, 5)))
def test_kernel_is_symmetric(values):
    r = ResponseSample.from_values(values, 1.0)
    ck = build_connecting_kernel(r)
    assert np.array_equal(ck.matrix, ck.matrix.T)
    A = symmetric_form(ck)
    assert np.array_equal(A, A.T)


def test_p_is_half_cumulative(r_one):
    p = build_p(r_one)
    assert p(0.0) == 0.0
    assert p(-0.3) == p(0.3)
    assert p.at_index(-4) == p.at_index(4)


def test_positive_for_genuine_response(r_one, r_sine):
    for r in (r_one, r_sine):
        rep = positivity_margin(build_connecting_kernel(r))
        assert rep.positive
        assert 0 < rep.min_eig <= 1.0 + 1e-12


def test_large_negative_response_is_not_positive():
    r = ResponseSample.from_values(np.full(401, -5.0), 1.0)
    rep = positivity_margin(build_connecting_kernel(r))
    assert not rep.positive
    assert rep.to_dict()["min_eig"] < 0


def test_quadratic_form_equals_control_energy(q_one, kernel_one, r_one):
    ck = build_connecting_kernel(r_one)
    M = control_matrix(kernel_one)
    w = ck.weights
    rng = np.random.default_rng(7)
    t = ck.grid.x
    for _ in range(5):
        a = rng.normal(size=4)
        f = sum(a[k] * np.sin((k + 1) * np.pi * t / 2) for k in range(4))
        lhs = np.sum(w * apply_connecting(ck, f) * f)
        z = M @ f
        rhs = np.sum(w * z * z)
        assert lhs == pytest.approx(rhs, rel=5 * ck.grid.h)


def test_horizon_validation(r_one):
    with pytest.raises(ValueError):
        build_connecting_kernel(r_one, 1.5)
    with pytest.raises(ValueError):
        build_connecting_kernel(r_one, 0.5025)
    assert build_connecting_kernel(r_one, 0.5).grid.n_points == 101


def test_apply_shape_check(r_one):
    ck = build_connecting_kernel(r_one, 0.5)
    with pytest.raises(ValueError):
        apply_connecting(ck, np.zeros(5))


def test_weights_are_trapezoid(r_one):
    ck = build_connecting_kernel(r_one, 0.5)
    np.testing.assert_array_equal(ck.weights, trapezoid_weights(101, 0.005))

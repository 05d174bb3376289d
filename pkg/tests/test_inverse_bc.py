import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bcinverse.errors import SolvabilityError
from bcinverse.forward import response_function
from bcinverse.grids import ResponseSample
from bcinverse.inverse_bc import (
    krein_rhs,
    ratio_recovery,
    recover_q_bc,
    remling_solve,
    solve_krein,
)

from conftest import sample


def _err(res, q, lo=0.1, hi=1.0):
    x = res.grid.x
    sel = (x >= lo - 1e-12) & (x <= hi + 1e-12)
    return np.max(np.abs(res.values[sel] - q(x[sel])))


def test_zero_response():
    r = ResponseSample.from_values(np.zeros(401), 1.0)
    res = recover_q_bc(r)
    assert np.max(np.abs(res.values)) <= 1e-8
    sol = solve_krein(r, 1.0, 0)
    assert sol.mu == pytest.approx(1.0)
    assert solve_krein(r, 1.0, 1).mu == pytest.approx(1.0)


def test_constant_potential(q_one, r_one):
    res = recover_q_bc(r_one)
    assert _err(res, q_one) < 2e-4
    assert res.diagnostics["mu0"][-1] == pytest.approx(np.sinh(1.0), rel=1e-4)
    # y_1 = cosh for q = 1
    assert res.diagnostics["mu1"][-1] == pytest.approx(np.cosh(1.0), rel=1e-4)
    assert res.gaps.size == 0


def test_asymmetric_potential():
    q = sample(lambda x: x)
    res = recover_q_bc(response_function(q, 1.0))
    assert _err(res, q) < 2e-4


def test_second_order_convergence():
    errs = []
    for n in (101, 201):
        q = sample(lambda x: np.sin(np.pi * x) + 0.5, n_points=n)
        errs.append(_err(recover_q_bc(response_function(q, 1.0)), q))
    assert errs[0] / errs[1] > 3.0


def test_subsampling_step(r_one, q_one):
    res = recover_q_bc(r_one, h=0.01)
    assert res.grid.h == pytest.approx(0.01)
    assert _err(res, q_one) < 1e-3
    with pytest.raises(ValueError):
        recover_q_bc(r_one, h=0.0075)


def test_krein_rhs_zero_response():
    rhs = krein_rhs(np.zeros(21), 0.1, 10, 1)
    assert np.all(rhs == 1.0)
    with pytest.raises(ValueError):
        krein_rhs(np.zeros(21), 0.1, 10, 2)


@settings(max_examples=40, deadline=None)
@given(scale=st.floats(1e-3, 1e3), a=st.floats(0.1, 3.0))
def test_ratio_invariant_under_scaling(scale, a):
    x = np.linspace(0, 1, 101)
    mu = np.sinh(a * x) + 0.3
    q1, v1 = ratio_recovery([mu], x[1])
    q2, v2 = ratio_recovery([scale * mu], x[1])
    np.testing.assert_allclose(q1, q2, rtol=1e-9, atol=1e-9)
    assert np.array_equal(v1, v2)


def test_ratio_falls_back_to_second_trace():
    x = np.linspace(0, 1, 11)
    mu0 = np.zeros(11)
    mu0[5:] = 1.0
    q, v = ratio_recovery([mu0, np.ones(11)], 0.1)
    assert np.all(v[:5] == 1)
    assert np.all(v[5:] == 0)


def test_ratio_gaps_when_all_traces_vanish():
    q, v = ratio_recovery([np.r_[0.0, np.ones(10)], np.r_[0.0, np.ones(10)]], 0.1)
    assert np.isnan(q[0]) and v[0] == -1


def test_gaps_block_conversion():
    from bcinverse.inverse_bc import RecoveryResult
    from bcinverse.grids import UniformGrid

    res = RecoveryResult(UniformGrid(3, 1.0), np.array([1.0, np.nan, 1.0]), np.array([0, -1, 0]), "bc")
    assert res.gaps.tolist() == [1]
    with pytest.raises(ValueError):
        res.to_potential()
    assert res.diagnostics_dict()["gaps"] == [1]


def test_non_positive_kernel_warns():
    r = ResponseSample.from_values(np.full(201, -5.0), 1.0)
    with pytest.warns(UserWarning, match="not positive"):
        try:
            recover_q_bc(r)
        except SolvabilityError:
            pass


def test_remling_matches_bc(r_sine):
    bc = recover_q_bc(r_sine)
    y = remling_solve(r_sine, which="y")
    assert np.nanmax(np.abs(y.q[1:] - bc.values[1:])) < 1e-8
    # y(x, x) is the j = 0 trace
    np.testing.assert_allclose(y.diagonal, bc.diagnostics["mu0"], atol=1e-10)
    z = remling_solve(r_sine, which="z")
    # the z right-hand side uses its own quadrature: agreement is O(h^2)
    np.testing.assert_allclose(z.diagonal, -bc.diagnostics["mu1"], atol=1e-5)
    with pytest.raises(ValueError):
        remling_solve(r_sine, which="w")

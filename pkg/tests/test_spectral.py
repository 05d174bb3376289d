import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from bcinverse.connecting import build_connecting_kernel
from bcinverse.errors import PoleProximityError
from bcinverse.forward import response_function
from bcinverse.grids import cumulative_trapezoid
from bcinverse.inverse_gl import gl_local_solve
from bcinverse.spectral import (
    SpectralData,
    a_amplitude_check,
    count_zeros,
    cell_potential,
    ct_from_sigma,
    dirichlet_eigs,
    laplace_piecewise_linear,
    m_function,
    r_from_sigma_integrated,
)

from conftest import sample


def _truncate(sd, n):
    return SpectralData(sd.length, sd.eigenvalues[:n], sd.weights[:n])


def test_zero_potential_exact():
    sd = dirichlet_eigs(sample(np.zeros_like), 1.0, 20)
    np.testing.assert_allclose(sd.eigenvalues, sd.reference_eigenvalues, rtol=1e-10)
    np.testing.assert_allclose(sd.weights, sd.reference_weights, rtol=1e-10)


@settings(max_examples=10, deadline=None)
@given(c=st.floats(-30, 30))
def test_constant_shift(c):
    sd = dirichlet_eigs(sample(lambda x: np.full_like(x, c), n_points=51), 1.0, 10)
    np.testing.assert_allclose(sd.eigenvalues - sd.reference_eigenvalues, c, atol=1e-8 * (1 + abs(c)) * 100)
    np.testing.assert_allclose(sd.weights / sd.reference_weights, 1.0, rtol=1e-8)


def test_first_order_perturbation():
    # lambda_1 - pi^2 ~ int_0^1 x 2 sin^2(pi x) dx = 1/2 for q = x
    sd = dirichlet_eigs(sample(lambda x: x), 1.0, 5)
    assert sd.eigenvalues[0] - np.pi**2 == pytest.approx(0.5, abs=2e-3)
    assert np.all(np.diff(sd.eigenvalues) > 0)


def test_negative_eigenvalue():
    c = np.pi**2 + 1
    sd = dirichlet_eigs(sample(lambda x: np.full_like(x, -c)), 1.0, 3)
    assert sd.eigenvalues[0] == pytest.approx(-1.0, abs=1e-8)


def test_count_zeros_brackets():
    qbar, h = cell_potential(sample(np.zeros_like), 1.0)
    lam = np.array([(2.5 * np.pi) ** 2, (0.5 * np.pi) ** 2])
    assert count_zeros(qbar, h, lam).tolist() == [2, 0]


def test_spectral_csv(tmp_path):
    sd = dirichlet_eigs(sample(np.ones_like), 1.0, 4)
    sd.to_csv(tmp_path / "s.csv", comment="hash")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "# hash"
    assert lines[1] == "n,lambda,alpha,lambda0,alpha0"
    assert len(lines) == 6


def test_ct_from_sigma_interior_convergence(r_one):
    ck = build_connecting_kernel(r_one)
    sd = dirichlet_eigs(sample(np.ones_like), 1.0, 200)
    x = ck.grid.x
    gaps = []
    for n in (50, 100, 200):
        c = ct_from_sigma(_truncate(sd, n), 1.0, 201).matrix
        # away from the corner t = s = 0, where x + t = 2L
        sel = x >= 0.1
        gaps.append(np.max(np.abs(c - ck.matrix)[np.ix_(sel, sel)]))
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 5e-3


def test_ct_from_sigma_longer_interval(r_one):
    ck = build_connecting_kernel(r_one)
    sd = dirichlet_eigs(sample(np.ones_like, length=2.0, n_points=401), 2.0, 200)
    gaps = [np.max(np.abs(ct_from_sigma(_truncate(sd, n), 1.0, 201).matrix - ck.matrix))
            for n in (50, 100, 200)]
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 1e-2


def test_ct_from_sigma_requires_long_interval():
    sd = dirichlet_eigs(sample(np.ones_like), 1.0, 5)
    with pytest.raises(ValueError):
        ct_from_sigma(sd, 1.5, 11)


def test_spectral_gl_round_trip():
    # q = 1, n_max = 200 on T = L = 1
    sd = dirichlet_eigs(sample(np.ones_like), 1.0, 200)
    _, res = gl_local_solve(ct_from_sigma(sd, 1.0, 201))
    x = res.grid.x
    sel = (x >= 0.1 - 1e-12) & (x <= 0.9 + 1e-12)
    assert np.max(np.abs(res.values[sel] - 1.0)) <= 0.05


def test_integrated_response(r_one):
    q = sample(np.ones_like, length=2.0, n_points=401)
    R = cumulative_trapezoid(r_one.values, r_one.h)
    gaps = []
    for n in (50, 100, 200):
        sd = dirichlet_eigs(q, 2.0, n)
        grid, v = r_from_sigma_integrated(sd, 1.0, 201)
        gaps.append(np.max(np.abs(v - np.interp(2 * grid.x, r_one.t, R))))
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 1e-2


@pytest.mark.parametrize("L", [0.5, 1.0, 2.0])
def test_m_function_zero_potential(L):
    k = np.linspace(0.5, 20, 12)
    m = m_function(sample(np.zeros_like, length=L), L, k)
    np.testing.assert_allclose(m.m, -k / np.tanh(k * L), rtol=1e-8)


def test_m_function_rejects_nonpositive_k():
    with pytest.raises(ValueError):
        m_function(sample(np.zeros_like), 1.0, [0.0])


def test_m_function_pole():
    # q = -(pi^2 + 1) has its lowest Dirichlet eigenvalue near -1, a pole of m(-k^2)
    q = sample(lambda x: np.full_like(x, -(np.pi**2 + 1)))
    lo, hi = 0.99, 1.01
    sign_lo = np.sign(1 / m_function(q, 1.0, [lo]).m[0])
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        try:
            s = np.sign(1 / m_function(q, 1.0, [mid]).m[0])
        except PoleProximityError:
            return
        lo, hi = (mid, hi) if s == sign_lo else (lo, mid)
    with pytest.raises(PoleProximityError):
        m_function(q, 1.0, [0.5 * (lo + hi)])


@settings(max_examples=30, deadline=None)
@given(rate=st.floats(1e-6, 50), a=st.floats(-3, 3), b=st.floats(-3, 3))
def test_laplace_exact_on_linear(rate, a, b):
    t = np.linspace(0, 1, 11)
    got = laplace_piecewise_linear(a + b * t, 0.1, rate)
    exact, _ = quad(lambda s: (a + b * s) * math.exp(-rate * s), 0, 1, epsabs=1e-14, epsrel=1e-13)
    assert got == pytest.approx(exact, rel=1e-8, abs=1e-10)


def test_amplitude_check_decay():
    chk = a_amplitude_check(sample(np.ones_like), 1.0, np.linspace(5, 20, 16))
    assert -2.4 <= chk.slope <= -1.6
    assert chk.flagged.any()
    d = chk.to_dict()
    assert set(d) == {"k", "residual", "floor", "flagged", "slope", "intercept"}

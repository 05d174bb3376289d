"""Forward dynamical map: waves, response function, control operator."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .goursat import TriangularKernel, half_node_potential, solve_goursat_picard
from .grids import PotentialSample, ResponseSample, UniformGrid, trapezoid_weights


@dataclass(frozen=True)
class Wavefield:
    """``values[m, k] = u^f(x_m, t_k)``; zero above the characteristic x = t."""

    horizon: float
    grid: UniformGrid
    values: np.ndarray


def _kernel(q, horizon, tol, kernel):
    if kernel is None:
        kernel = solve_goursat_picard(q, horizon, tol=tol)
    n = round(horizon / kernel.h)
    if n > kernel.n:
        raise ValueError("kernel horizon is shorter than requested")
    return kernel, n


def response_function(q: PotentialSample, horizon: float, tol: float = 1e-12,
                      kernel: TriangularKernel | None = None) -> ResponseSample:
    """r(t) = -q(t/2)/2 - 1/2 int_0^t q((t - z)/2) v(z, t) dz on [0, 2T]."""
    kernel, n = _kernel(q, horizon, tol, kernel)
    h = kernel.h
    q_half = half_node_potential(q, kernel.horizon)
    v = kernel.values
    m = 2 * n
    r = np.empty(m + 1)
    for j in range(m + 1):
        # z = i h, i = 0..j; q((t - z)/2) = q_half[j - i]
        integrand = q_half[j::-1] * v[: j + 1, j]
        integral = 0.0 if j == 0 else h * (integrand.sum() - 0.5 * (integrand[0] + integrand[-1]))
        r[j] = -0.5 * q_half[j] - 0.5 * integral
    return ResponseSample(n * h, UniformGrid(m + 1, m * h), r)


def _check_control(f, n):
    f = np.asarray(f, dtype=float)
    if f.shape != (n + 1,):
        raise ValueError(f"control must have {n + 1} samples, got {f.shape}")
    return f


def wave_solve(q: PotentialSample, f, horizon: float, tol: float = 1e-12,
               kernel: TriangularKernel | None = None, f_tol: float = 1e-8) -> Wavefield:
    """u^f(x, t) = f(t - x) + int_x^t w(x, s) f(t - s) ds for x <= t."""
    kernel, n = _kernel(q, horizon, tol, kernel)
    f = _check_control(f, n)
    if abs(f[0]) > f_tol * max(1.0, np.max(np.abs(f))):
        raise ValueError("control must vanish at t = 0")
    h = kernel.h
    W = kernel.w_matrix()[: n + 1, : n + 1]
    u = np.zeros((n + 1, n + 1))
    for k in range(n + 1):
        for m in range(k + 1):
            # s = x_m .. t_k; f(t - s) = f[k - s_idx]
            s = np.arange(m, k + 1)
            u[m, k] = f[k - m] + (trapezoid_weights(s.size, h) * W[m, s] * f[k - s]).sum()
    return Wavefield(n * h, UniformGrid(n + 1, n * h), u)


def control_matrix(kernel: TriangularKernel, n: int | None = None) -> np.ndarray:
    """Nystrom matrix of W^T acting on f sampled at t_0..t_n."""
    if n is None:
        n = kernel.n
    h = kernel.h
    W = kernel.w_matrix()[: n + 1, : n + 1]
    M = np.zeros((n + 1, n + 1))
    for m in range(n + 1):
        # tau_k for k = m..n, f(T - tau_k) = f[n - k]
        k = np.arange(m, n + 1)
        M[m, n - k] += trapezoid_weights(k.size, h) * W[m, k]
        M[m, n - m] += 1.0
    return M


def control_apply(q: PotentialSample, f, horizon: float, tol: float = 1e-12,
                  kernel: TriangularKernel | None = None) -> np.ndarray:
    """Final state z(x) = u^f(x, T) = f(T - x) + int_x^T w(x, tau) f(T - tau) dtau."""
    kernel, n = _kernel(q, horizon, tol, kernel)
    f = _check_control(f, n)
    return control_matrix(kernel, n) @ f


def control_invert(q: PotentialSample, z, horizon: float, tol: float = 1e-12,
                   kernel: TriangularKernel | None = None, return_residual: bool = False):
    """Control f with u^f(., T) = z, by marching the Volterra equation from x = T to 0."""
    kernel, n = _kernel(q, horizon, tol, kernel)
    z = _check_control(z, n)
    h = kernel.h
    W = kernel.w_matrix()
    g = np.zeros(n + 1)  # g[k] = f(T - tau_k)
    g[n] = z[n]
    for m in range(n - 1, -1, -1):
        k = np.arange(m, n + 1)
        wts = trapezoid_weights(k.size, h) * W[m, k]
        rhs = z[m] - (wts[1:] * g[m + 1:]).sum()
        g[m] = rhs / (1.0 + wts[0])
    f = g[::-1].copy()
    if return_residual:
        residual = float(np.max(np.abs(control_matrix(kernel, n) @ f - z)))
        return f, residual
    return f

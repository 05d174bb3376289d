"""Gelfand-Levitan recoveries and the A-amplitude flow.

The local equation

    V(y, t) + c^T(y, t) + int_y^T c^T(t, s) V(y, s) ds = 0,   y < t < T,

is the classical one F + K + int_0^x K F = 0 under the relabeling
x = T - y, F(x, t) = c^T(T - x, T - t), K(x, t) = V(T - x, T - t).
Since K(x, x) = 1/2 int_0^x q, the diagonal of V gives
q(T - y) = -2 d/dy V(y, y).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .connecting import ConnectingKernel
from .errors import FlowError, SolvabilityError
from .grids import UniformGrid, trapezoid_weights
from .inverse_bc import RecoveryResult, _solve

BLOWUP = 1e6


@dataclass(frozen=True)
class GLKernel:
    """``values[a, b] = V(y_a, t_b)`` for ``a <= b``; zero for t < y."""

    horizon: float
    grid: UniformGrid
    values: np.ndarray
    max_residual: float

    @property
    def diagonal(self) -> np.ndarray:
        return np.diag(self.values).copy()

    def goursat_diagnostics(self) -> dict:
        """Edge values of V, reported rather than asserted."""
        return {
            "max_abs_V_last_column": float(np.max(np.abs(self.values[:, -1]))),
            "max_abs_V_first_row": float(np.max(np.abs(self.values[0]))),
        }


def gl_local_solve(ck: ConnectingKernel, guard_singular: float = 1e-14):
    """Solve the local equation for every grid y; returns ``(GLKernel, RecoveryResult)``.

    The recovered potential is indexed by x = T - y.
    """
    n = ck.grid.n_intervals
    h = ck.grid.h
    c = ck.matrix
    V = np.zeros((n + 1, n + 1))
    V[n, n] = -c[n, n]
    worst = 0.0
    for a in range(n):
        win = slice(a, n + 1)
        m = n + 1 - a
        A = np.eye(m) + c[win, win] * trapezoid_weights(m, h)[None, :]
        try:
            X, res = _solve(A, -c[a, win][:, None], f"local GL equation at y={a * h}")
        except SolvabilityError:
            raise
        V[a, win] = X[:, 0]
        worst = max(worst, float(res[0]))
    kernel = GLKernel(ck.horizon, ck.grid, V, worst)
    dV = np.gradient(kernel.diagonal, h, edge_order=2)
    q = (-2.0 * dV)[::-1]
    result = RecoveryResult(ck.grid, q, np.zeros(n + 1, dtype=int), "gl",
                            {"max_residual": worst, **kernel.goursat_diagnostics()})
    return kernel, result


def relabel_to_classical(ck: ConnectingKernel) -> np.ndarray:
    """F(x_i, t_j) = c^T(T - x_i, T - t_j)."""
    return ck.matrix[::-1, ::-1].copy()


def gl_classical_solve(F: np.ndarray, h: float, m: int):
    """K(x_m, t_j), j <= m, from F(x, t) + K(x, t) + int_0^x K(x, s) F(s, t) ds = 0."""
    if m == 0:
        return -F[0, :1].copy(), 0.0
    A = np.eye(m + 1) + F[: m + 1, : m + 1].T * trapezoid_weights(m + 1, h)[None, :]
    X, res = _solve(A, -F[m, : m + 1][:, None], f"Gelfand-Levitan equation at x={m * h}")
    return X[:, 0], float(res[0])


def gl_classical_recover(F: np.ndarray, grid: UniformGrid) -> tuple[np.ndarray, RecoveryResult]:
    """Solve for every grid x and recover q(x) = 2 d/dx K(x, x)."""
    n = grid.n_intervals
    h = grid.h
    K = np.zeros((n + 1, n + 1))
    worst = 0.0
    for m in range(n + 1):
        K[m, : m + 1], res = gl_classical_solve(F, h, m)
        worst = max(worst, res)
    q = 2.0 * np.gradient(np.diag(K), h, edge_order=2)
    return K, RecoveryResult(grid, q, np.zeros(n + 1, dtype=int), "gl-classical",
                             {"max_residual": worst})


def convolution_trapezoid(A: np.ndarray, h: float) -> np.ndarray:
    """int_0^t A(s) A(t - s) ds at every node by the trapezoid rule."""
    full = np.convolve(A, A)[: A.size]
    return h * (full - A[0] * A)


def simon_flow(A0, a: float, h: float) -> RecoveryResult:
    """March dA/dx = dA/dt + int_0^t A(s, x) A(t - s, x) ds in x.

    One step moves along the characteristics t + x = const (an exact shift
    by one node) and adds the convolution term explicitly.  q(x) = A(0+, x).
    """
    A = np.array(A0, dtype=float)
    n = round(a / h)
    if A.size != n + 1:
        raise ValueError(f"A0 must have {n + 1} samples on [0, {a}] at step {h}")
    q = np.empty(n + 1)
    for step in range(n + 1):
        q[step] = A[0]
        if step == n:
            break
        A = A[1:] + h * convolution_trapezoid(A, h)[1:]
        peak = np.max(np.abs(A))
        if not np.isfinite(peak) or peak > BLOWUP:
            raise FlowError(f"A-amplitude flow blew up at x={(step + 1) * h}",
                            x_reached=(step + 1) * h)
    return RecoveryResult(UniformGrid(n + 1, n * h), q, np.zeros(n + 1, dtype=int), "simon", {})

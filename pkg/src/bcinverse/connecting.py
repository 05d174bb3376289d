"""Connecting operator C^T built from the response function."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .grids import ResponseSample, UniformGrid, cumulative_trapezoid, trapezoid_weights


@dataclass(frozen=True)
class EvenCumulative:
    """p(t) = 1/2 int_0^{|t|} r on nodes ``k h``, ``|k| <= 2n``."""

    h: float
    values: np.ndarray  # values[k] = p(k h), k >= 0

    def at_index(self, k):
        return self.values[np.abs(k)]

    def __call__(self, t):
        return np.interp(np.abs(t), np.arange(self.values.size) * self.h, self.values)


def build_p(r: ResponseSample) -> EvenCumulative:
    return EvenCumulative(r.h, 0.5 * cumulative_trapezoid(r.values, r.h))


@dataclass(frozen=True)
class ConnectingKernel:
    """c^T(t_i, s_j) = p(2T - t_i - s_j) - p(t_i - s_j) on ``[0, T]^2``."""

    horizon: float
    grid: UniformGrid
    matrix: np.ndarray
    p: EvenCumulative | None = None

    @property
    def weights(self) -> np.ndarray:
        return trapezoid_weights(self.grid.n_points, self.grid.h)

    def operator_matrix(self) -> np.ndarray:
        """Nystrom matrix of I + C_T (acts on grid samples)."""
        return np.eye(self.grid.n_points) + self.matrix * self.weights[None, :]


def connecting_matrix(p: EvenCumulative, n: int) -> np.ndarray:
    """c^T on the nodes of [0, n h]; all arguments fall on p's nodes."""
    i = np.arange(n + 1)
    return p.at_index(2 * n - i[:, None] - i[None, :]) - p.at_index(i[:, None] - i[None, :])


def build_connecting_kernel(r: ResponseSample, horizon: float | None = None) -> ConnectingKernel:
    if horizon is None:
        horizon = r.horizon
    if horizon > r.horizon * (1 + 1e-12):
        raise ValueError(f"response covers [0, {2 * r.horizon}], need [0, {2 * horizon}]")
    n = round(horizon / r.h)
    if abs(n * r.h - horizon) > 1e-9 * max(horizon, 1.0):
        raise ValueError(f"horizon {horizon} is not a node of the response grid")
    p = build_p(r)
    return ConnectingKernel(n * r.h, UniformGrid(n + 1, n * r.h), connecting_matrix(p, n), p)


def apply_connecting(kernel: ConnectingKernel, f) -> np.ndarray:
    """(C^T f)(t_i) = f(t_i) + sum_j w_j c^T(t_i, s_j) f(s_j)."""
    f = np.asarray(f, dtype=float)
    if f.shape != (kernel.grid.n_points,):
        raise ValueError(f"control has {f.shape} samples, kernel grid has {kernel.grid.n_points}")
    return f + kernel.matrix @ (kernel.weights * f)


@dataclass(frozen=True)
class PositivityReport:
    min_eig: float
    positive: bool
    n: int

    def to_dict(self):
        return {"min_eig": self.min_eig, "positive": self.positive, "n": self.n}


def symmetric_form(kernel: ConnectingKernel) -> np.ndarray:
    """I + D^{1/2} c D^{1/2}: symmetric, similar to the Nystrom matrix of I + C_T.

    The end weights of the trapezoid rule on a one-node grid are zero, so
    the congruence is taken with the weights themselves.
    """
    d = np.sqrt(kernel.weights)
    return np.eye(kernel.grid.n_points) + np.outer(d, d) * kernel.matrix


def positivity_margin(kernel: ConnectingKernel) -> PositivityReport:
    A = symmetric_form(kernel)
    try:
        lam = linalg.eigvalsh(A, subset_by_index=[0, 0])[0]
    except linalg.LinAlgError as exc:
        raise ArithmeticError(f"eigenvalue computation failed: {exc}") from exc
    if not math.isfinite(lam):
        raise ArithmeticError("eigenvalue computation returned a non-finite value")
    return PositivityReport(float(lam), bool(lam > 0), kernel.grid.n_points)

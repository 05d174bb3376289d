"""Goursat kernel w(x, t) of the wave problem with potential q.

The kernel is handled in characteristic coordinates ``xi = t - x``,
``eta = t + x``, where ``v(xi, eta) = w(x, t)`` solves

    v_{xi eta} = -q((eta - xi)/2) v / 4,   v(eta, eta) = 0,
    v(0, eta) = -1/2 int_0^{eta/2} q.

With lattice step h in both xi and eta, node ``(i, j)`` maps to
``x = (j - i) h / 2``, ``t = (j + i) h / 2``; the w-grid node
``(x_m, t_k)`` is lattice node ``(k - m, k + m)``.  The lattice covers
``0 <= xi <= eta <= 2T`` so that the response function on ``[0, 2T]``
can be read off directly; it only needs q on ``[0, T]``.

Note that w(x, t) = L(t, x), where L is the kernel of the inverse
transformation operator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError
from .grids import PotentialSample, UniformGrid, cumulative_trapezoid, write_matrix_csv

MAX_ITER = 64


@dataclass(frozen=True)
class TriangularKernel:
    """Kernel sampled on a triangular domain.

    ``values[i, j]`` holds v(i h, j h) for ``i <= j`` and is zero below
    the diagonal.  ``orientation`` names the stored object ("v" for the
    characteristic form of w).
    """

    horizon: float
    grid: UniformGrid
    values: np.ndarray
    orientation: str = "v"
    iterations: int = 0
    tail_bound: float = 0.0

    @property
    def h(self) -> float:
        return self.grid.h

    @property
    def n(self) -> int:
        """Number of intervals of the w-grid on ``[0, T]``."""
        return self.grid.n_intervals

    def w(self, m, k):
        """w(x_m, t_k) for integer node indices (``m <= k``, ``k + m <= 2n``)."""
        m = np.asarray(m)
        k = np.asarray(k)
        return np.where(k >= m, self.values[np.abs(k - m), k + m], 0.0)

    def w_matrix(self) -> np.ndarray:
        """``W[m, k] = w(x_m, t_k)`` on ``[0, T]^2``, zero for ``t < x``."""
        idx = np.arange(self.n + 1)
        return self.w(idx[:, None], idx[None, :])

    def to_csv(self, path, comment=None):
        """Rows indexed by t, columns by x; zero above the diagonal."""
        header = "domain=lower-triangle"
        if comment:
            header = f"{comment}\n{header}"
        x = self.grid.x
        return write_matrix_csv(path, x, x, self.w_matrix().T, comment=header, corner="t\\x")


def half_node_potential(q: PotentialSample, horizon: float) -> np.ndarray:
    """q at ``k h / 2`` for ``k = 0..2n``, linear between nodes."""
    n = round(horizon / q.grid.h)
    qh = np.empty(2 * n + 1)
    vals = q.values[: n + 1]
    qh[0::2] = vals
    qh[1::2] = 0.5 * (vals[:-1] + vals[1:])
    return qh


def boundary_term(q_half: np.ndarray, h: float) -> np.ndarray:
    """Q(xi, eta) = -1/2 int_{xi/2}^{eta/2} q on the lattice (upper triangle)."""
    cum = cumulative_trapezoid(q_half, h / 2)
    Q = -0.5 * (cum[None, :] - cum[:, None])
    return np.triu(Q)


def _lattice_potential(q_half: np.ndarray) -> np.ndarray:
    """q((eta - xi)/2) on the lattice, i.e. ``q_half[j - i]``."""
    n = q_half.size
    d = np.arange(n)[None, :] - np.arange(n)[:, None]
    return np.where(d >= 0, q_half[np.clip(d, 0, None)], 0.0)


def apply_K(u: np.ndarray, q_lattice: np.ndarray, h: float) -> np.ndarray:
    """(K u)(xi, eta) = 1/4 int_0^xi dxi1 int_xi^eta q((eta1-xi1)/2) u(xi1, eta1) deta1.

    Nested trapezoid sums through two prefix tables, O(n^2) per call.
    """
    g = np.triu(q_lattice * u)
    # P[i1, j] = int_{xi_i1}^{eta_j} g(xi_i1, .), valid for j >= i1
    P = cumulative_trapezoid(g, h, axis=1)
    P = P - np.diag(P)[:, None]
    # CT[i, j] = int_0^{xi_i} P(., eta_j)
    CT = cumulative_trapezoid(P, h, axis=0)
    return np.triu(0.25 * (CT - np.diag(CT)[:, None]))


def _tail_bound(S: float, xi_max: float, n_terms: int) -> float:
    """Bound on sum_{m > n_terms} S (S xi/2)^m / m!."""
    x = S * xi_max / 2
    if x > 700.0:
        return math.inf
    term = S
    partial = S
    for m in range(1, n_terms + 1):
        term *= x / m
        partial += term
    return max(S * math.exp(x) - partial, 0.0)


def solve_goursat_picard(q: PotentialSample, horizon: float, tol: float = 1e-12,
                         max_iter: int = MAX_ITER) -> TriangularKernel:
    """Picard series v = Q + sum (-1)^n K^n Q on the characteristic lattice.

    Stops as soon as either the analytic tail bound or the size of the
    latest iterate drops below ``tol``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if horizon > q.grid.length * (1 + 1e-12):
        raise ValueError(f"horizon {horizon} exceeds potential length {q.grid.length}")
    h = q.grid.h
    n = round(horizon / h)
    if abs(n * h - horizon) > 1e-9 * max(horizon, 1.0):
        raise ValueError(f"horizon {horizon} is not a node of the potential grid")

    q_half = half_node_potential(q, n * h)
    q_lat = _lattice_potential(q_half)
    term = boundary_term(q_half, h)
    v = term.copy()

    S = 0.5 * float(cumulative_trapezoid(np.abs(q_half), h / 2)[-1])
    xi_max = 2 * n * h
    bound = _tail_bound(S, xi_max, 0)
    it = 0
    while bound > tol and np.max(np.abs(term), initial=0.0) > tol:
        if it >= max_iter:
            raise ConvergenceError(
                f"Picard series not converged after {max_iter} iterations "
                f"(tail bound {bound:.3e}, last iterate {np.max(np.abs(term)):.3e})",
                achieved=min(bound, float(np.max(np.abs(term)))),
            )
        term = -apply_K(term, q_lat, h)
        v += term
        it += 1
        bound = _tail_bound(S, xi_max, it)

    return TriangularKernel(
        horizon=n * h,
        grid=UniformGrid(n + 1, n * h),
        values=v,
        orientation="v",
        iterations=it,
        tail_bound=bound,
    )


def goursat_fd_oracle(q: PotentialSample, horizon: float, h: float) -> TriangularKernel:
    """Independent marching solve of v_{xi eta} = -q v / 4 on a lattice of step h.

    Each cell uses the rectangle rule with the cell-averaged v, which makes
    the update implicit in the new corner only.
    """
    n = round(horizon / h)
    if n < 2 or abs(n * h - horizon) > 1e-9 * max(horizon, 1.0):
        raise ValueError(f"h={h} does not divide horizon {horizon}")
    m = 2 * n
    # q at (j - i) h / 2, read from the sampled potential by interpolation
    qh = q(np.arange(m + 1) * h / 2)
    edge = np.zeros(m + 1)
    edge[1:] = -0.5 * np.cumsum(0.5 * (h / 2) * (qh[1:] + qh[:-1]))

    v = np.zeros((m + 1, m + 1))
    v[0, :] = edge
    c = h * h / 16.0
    for i in range(m):
        # cells [i, i+1] x [j, j+1] with j >= i + 1; v[i+1, i+1] = 0 on the diagonal
        row_prev = v[i]
        row = v[i + 1]
        for j in range(i + 1, m):
            a = -c * qh[j - i]
            row[j + 1] = (row[j] + row_prev[j + 1] - row_prev[j]
                          + a * (row_prev[j] + row[j] + row_prev[j + 1])) / (1.0 - a)
    return TriangularKernel(
        horizon=n * h,
        grid=UniformGrid(n + 1, n * h),
        values=v,
        orientation="v",
    )


def kernel_derivatives(kernel: TriangularKernel, q: PotentialSample):
    """Closed-form derivatives (v_xi, v_eta) from the integral representation.

    v_eta = -q(eta/2)/4 - 1/4 int_0^xi q((eta-z)/2) v(z, eta) dz
    v_xi  =  q(xi/2)/4  - 1/4 int_xi^eta q((z-xi)/2) v(xi, z) dz
                        + 1/4 int_0^xi q((xi-z)/2) v(z, xi) dz
    """
    h = kernel.h
    q_half = half_node_potential(q, kernel.horizon)
    if q_half.size != kernel.values.shape[0]:
        raise ValueError("potential grid does not match kernel lattice")
    g = np.triu(_lattice_potential(q_half) * kernel.values)

    # column-wise int_0^xi g(z, eta) dz
    col = cumulative_trapezoid(g, h, axis=0)
    v_eta = -0.25 * q_half[None, :] - 0.25 * col
    # row-wise int_xi^eta g(xi, z) dz
    row = cumulative_trapezoid(g, h, axis=1)
    row = row - np.diag(row)[:, None]
    # int_0^xi g(z, xi) dz is the column integral on the diagonal
    diag = np.diag(col)
    v_xi = 0.25 * q_half[:, None] - 0.25 * row + 0.25 * diag[:, None]
    return np.triu(v_xi), np.triu(v_eta)


def picard_bound(q: PotentialSample, kernel: TriangularKernel) -> np.ndarray:
    """Pointwise a-priori bound S(eta) exp(S(eta) xi / 2) on the lattice."""
    h = kernel.h
    q_half = half_node_potential(q, kernel.horizon)
    S = 0.5 * cumulative_trapezoid(np.abs(q_half), h / 2)
    idx = np.arange(q_half.size)
    xi = idx[:, None] * h
    B = S[None, :] * np.exp(S[None, :] * xi / 2)
    return np.triu(B)

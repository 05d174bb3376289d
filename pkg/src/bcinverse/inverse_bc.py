"""Recovery of q from r via the Krein-type equations and Remling's equations.

For each horizon T the Krein-type equations

    f(t) + int_0^T c^T(t, s) f(s) ds = rhs_j(t),   t in [0, T],

have boundary traces mu_j(T) = f_j^T(0) equal to y_j(T), the solutions of
-y'' + q y = 0 with (y, y')(0) = (0, 1) for j = 0 and (1, 0) for j = 1.
Hence q(T) = mu_j''(T) / mu_j(T).
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .connecting import (
    EvenCumulative,
    PositivityReport,
    build_connecting_kernel,
    build_p,
    connecting_matrix,
    positivity_margin,
)
from .errors import SolvabilityError
from .grids import (
    PotentialSample,
    ResponseSample,
    UniformGrid,
    cumulative_trapezoid,
    second_derivative,
    trapezoid_weights,
)

log = logging.getLogger(__name__)

ZERO_GUARD = 1e-6


@dataclass(frozen=True)
class KreinSolution:
    horizon: float
    variant: int
    f: np.ndarray
    mu: float
    residual: float


def _horizon_index(r: ResponseSample, horizon: float) -> int:
    if horizon > r.horizon * (1 + 1e-12):
        raise ValueError(f"response covers [0, {2 * r.horizon}], need [0, {2 * horizon}]")
    n = round(horizon / r.h)
    if abs(n * r.h - horizon) > 1e-9 * max(horizon, 1.0):
        raise ValueError(f"horizon {horizon} is not a node of the response grid")
    return n


def krein_rhs(r_values: np.ndarray, h: float, n: int, variant: int) -> np.ndarray:
    """T - t for j = 0; 1 - int_t^T r(s - t)(T - s) ds for j = 1."""
    t = np.arange(n + 1) * h
    T = n * h
    if variant == 0:
        return T - t
    if variant != 1:
        raise ValueError(f"variant must be 0 or 1, got {variant}")
    rhs = np.ones(n + 1)
    for i in range(n):
        k = np.arange(i, n + 1)
        rhs[i] -= (trapezoid_weights(k.size, h) * r_values[k - i] * (T - k * h)).sum()
    return rhs


def _krein_system(p: EvenCumulative, n: int, h: float) -> np.ndarray:
    c = connecting_matrix(p, n)
    return np.eye(n + 1) + c * trapezoid_weights(n + 1, h)[None, :]


def _solve(A, B, context):
    try:
        lu = linalg.lu_factor(A, check_finite=True)
    except (linalg.LinAlgError, ValueError) as exc:
        raise SolvabilityError(f"{context}: {exc}") from exc
    if np.any(np.abs(np.diag(lu[0])) < 1e-14 * max(1.0, np.abs(A).max())):
        raise SolvabilityError(f"{context}: discrete system is singular")
    X = linalg.lu_solve(lu, B)
    res = np.max(np.abs(A @ X - B), axis=0)
    return X, res


def solve_krein(r: ResponseSample, horizon: float, variant: int = 0,
                check_positivity: bool = True) -> KreinSolution:
    n = _horizon_index(r, horizon)
    h = r.h
    A = _krein_system(build_p(r), n, h)
    rhs = krein_rhs(r.values, h, n, variant)
    report = None
    if check_positivity and n > 0:
        report = positivity_margin(build_connecting_kernel(r, n * h))
        if not report.positive:
            warnings.warn(f"connecting operator is not positive (min eig {report.min_eig:.3e})")
    try:
        f, res = _solve(A, rhs[:, None], f"Krein equation at T={n * h}")
    except SolvabilityError as exc:
        if report is not None:
            raise SolvabilityError(f"{exc}; positivity: {report.to_dict()}") from exc
        raise
    return KreinSolution(n * h, variant, f[:, 0], float(f[0, 0]), float(res[0]))


@dataclass
class RecoveryResult:
    """Recovered potential on a grid; NaN marks gaps.

    ``variant[i]`` is the trace used at node i (0 or 1, -1 for a gap).
    """

    grid: UniformGrid
    values: np.ndarray
    variant: np.ndarray
    method: str
    diagnostics: dict = field(default_factory=dict)

    @property
    def gaps(self) -> np.ndarray:
        return np.flatnonzero(~np.isfinite(self.values))

    def to_potential(self) -> PotentialSample:
        if self.gaps.size:
            raise ValueError(f"recovery has gaps at nodes {self.gaps.tolist()}")
        return PotentialSample(self.grid, self.values)

    def diagnostics_dict(self) -> dict:
        out = {"method": self.method, "gaps": self.gaps.tolist(),
               "lower_accuracy_nodes": [0, self.grid.n_points - 1]}
        for key, val in self.diagnostics.items():
            if isinstance(val, np.ndarray):
                val = val.tolist()
            elif isinstance(val, PositivityReport):
                val = val.to_dict()
            out[key] = val
        return out


def ratio_recovery(traces, h: float, guard: float = ZERO_GUARD):
    """q = mu'' / mu using the first trace that clears the zero guard.

    Returns ``(q, variant)`` with NaN / -1 where every trace is too small.
    """
    q = np.full(traces[0].size, np.nan)
    variant = np.full(traces[0].size, -1)
    for j, mu in enumerate(traces):
        eps = guard * np.max(np.abs(mu))
        usable = (np.abs(mu) >= eps) & (variant < 0)
        d2 = second_derivative(mu, h)
        with np.errstate(divide="ignore", invalid="ignore"):
            q[usable] = d2[usable] / mu[usable]
        variant[usable] = j
    return q, variant


def recover_q_bc(r: ResponseSample, horizon: float | None = None, h: float | None = None,
                 guard: float = ZERO_GUARD) -> RecoveryResult:
    """Solve both Krein equations for every grid horizon in (0, T_max] and
    recover q(T) = mu_j''(T) / mu_j(T), preferring j = 0."""
    if h is not None and not np.isclose(h, r.h, rtol=1e-9):
        stride = round(h / r.h)
        if stride < 1 or not np.isclose(stride * r.h, h, rtol=1e-9):
            raise ValueError(f"step {h} is not a multiple of the response step {r.h}")
        r = ResponseSample(r.horizon, UniformGrid((r.grid.n_points - 1) // stride + 1, r.grid.length),
                           r.values[::stride])
    if horizon is None:
        horizon = r.horizon
    N = _horizon_index(r, horizon)
    h = r.h
    p = build_p(r)
    mu = np.zeros((2, N + 1))
    residual = np.zeros(N + 1)
    mu[1, 0] = 1.0  # one-node system: f(0) = rhs(0)
    for n in range(1, N + 1):
        A = _krein_system(p, n, h)
        B = np.column_stack([krein_rhs(r.values, h, n, 0), krein_rhs(r.values, h, n, 1)])
        X, res = _solve(A, B, f"Krein equations at T={n * h}")
        mu[:, n] = X[0]
        residual[n] = res.max()
    report = positivity_margin(build_connecting_kernel(r, N * h))
    if not report.positive:
        warnings.warn(f"connecting operator is not positive (min eig {report.min_eig:.3e})")
    q, variant = ratio_recovery([mu[0], mu[1]], h, guard)
    if np.any(variant < 0):
        log.warning("recovery gaps at T nodes %s", np.flatnonzero(variant < 0).tolist())
    grid = UniformGrid(N + 1, N * h)
    return RecoveryResult(grid, q, variant, "bc", {
        "mu0": mu[0], "mu1": mu[1], "max_residual": float(residual.max()),
        "positivity": report, "zero_guard": guard,
    })


# --- Remling's equations ----------------------------------------------------


def amplitude_from_response(r: ResponseSample) -> np.ndarray:
    """A(t) = -2 r(2t) at t = k h/2, k = 0..2n (covers [0, T])."""
    return -2.0 * np.asarray(r.values)


@dataclass(frozen=True)
class RemlingSolution:
    """``solution[m, i]`` = y(x_m, t_i) (or z) for i <= m."""

    grid: UniformGrid
    which: str
    solution: np.ndarray
    diagonal: np.ndarray
    q: np.ndarray
    max_residual: float


def remling_kernel(r: ResponseSample, n: int):
    """phi on nodes k h (k <= 2n) and k(t, s) = [phi(t - s) - phi(t + s)] / 2 on [0, n h]^2."""
    h = r.h
    A = amplitude_from_response(r)
    # phi(x) = int_0^{|x|/2} A, with A on step h/2
    phi = cumulative_trapezoid(A, h / 2)
    i = np.arange(n + 1)
    k = 0.5 * (phi[np.abs(i[:, None] - i[None, :])] - phi[i[:, None] + i[None, :]])
    return phi, k


def remling_solve(r: ResponseSample, horizon: float | None = None, which: str = "y",
                  guard: float = ZERO_GUARD) -> RemlingSolution:
    """Solve y(x, t) + int_0^x k(t, s) y(x, s) ds = rhs(t) for every grid x."""
    if which not in ("y", "z"):
        raise ValueError(f"which must be 'y' or 'z', got {which!r}")
    if horizon is None:
        horizon = r.horizon
    n = _horizon_index(r, horizon)
    h = r.h
    phi, k = remling_kernel(r, n)
    t = np.arange(n + 1) * h
    if which == "y":
        rhs = t
    else:
        rhs = -1.0 - cumulative_trapezoid(phi[: n + 1], h)
    sol = np.zeros((n + 1, n + 1))
    sol[0, 0] = rhs[0]
    worst = 0.0
    for m in range(1, n + 1):
        A = np.eye(m + 1) + k[: m + 1, : m + 1] * trapezoid_weights(m + 1, h)[None, :]
        X, res = _solve(A, rhs[: m + 1, None], f"Remling equation at x={m * h}")
        sol[m, : m + 1] = X[:, 0]
        worst = max(worst, float(res[0]))
    diag = np.diag(sol).copy()
    q, _ = ratio_recovery([diag], h, guard)
    return RemlingSolution(UniformGrid(n + 1, n * h), which, sol, diag, q, worst)

"""Spectral data of the Dirichlet problem on [0, L] and spectral representations.

Eigenvalues come from shooting phi(x, lam) with phi(0) = 0, phi'(0) = 1.
Each grid cell carries the constant potential (q_i + q_{i+1}) / 2 and is
crossed with the exact propagator of -phi'' + c phi = lam phi, so high modes
need no step restriction; for constant q the computed spectrum is exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .connecting import ConnectingKernel
from .errors import EigensolverError, PoleProximityError
from .forward import response_function
from .grids import PotentialSample, UniformGrid

REL_TOL = 1e-12
_SERIES_CUTOFF = 0.1


def _cell_functions(s, h):
    """Propagator entries for phi'' = -s phi over a step h.

    Returns ``(C, S)`` with C = cos(sqrt(s) h) and S = sin(sqrt(s) h)/sqrt(s),
    continued analytically to s <= 0.
    """
    x = s * h * h
    C = np.empty_like(x)
    S = np.empty_like(x)
    small = np.abs(x) < _SERIES_CUTOFF
    pos = (x > 0) & ~small
    neg = (x < 0) & ~small
    xs = x[small]
    # cos and sin/arg as power series in x = (k h)^2
    C[small] = 1 - xs / 2 + xs**2 / 24 - xs**3 / 720 + xs**4 / 40320 - xs**5 / 3628800
    S[small] = h * (1 - xs / 6 + xs**2 / 120 - xs**3 / 5040 + xs**4 / 362880 - xs**5 / 39916800)
    k = np.sqrt(s[pos])
    C[pos] = np.cos(k * h)
    S[pos] = np.sin(k * h) / k
    k = np.sqrt(-s[neg])
    C[neg] = np.cosh(k * h)
    S[neg] = np.sinh(k * h) / k
    return C, S


def _sin_square_integral(s, h, C, S):
    """int_0^h (sin(k y)/k)^2 dy = (h - C S) / (2 s), via series near s = 0."""
    x = s * h * h
    out = np.empty_like(x)
    small = np.abs(x) < _SERIES_CUTOFF
    xs = x[small]
    out[small] = h**3 * (1 / 3 - xs / 15 + 2 * xs**2 / 315 - xs**3 / 2835 + 2 * xs**4 / 155925)
    big = ~small
    out[big] = (h - C[big] * S[big]) / (2 * s[big])
    return out


def cell_potential(q: PotentialSample, length: float) -> tuple[np.ndarray, float]:
    n = q.grid.index_of(length)
    vals = q.values[: n + 1]
    return 0.5 * (vals[:-1] + vals[1:]), q.grid.h


def shoot(qbar: np.ndarray, h: float, lam, substeps: int = 1, norm: bool = False):
    """Propagate (phi, phi') from (0, 1) through all cells for each lam.

    Returns phi sampled at every sub-node (shape ``(n_sub + 1, len(lam))``),
    the final phi', and optionally int_0^L phi^2.
    """
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    hs = h / substeps
    phi = np.zeros_like(lam)
    dphi = np.ones_like(lam)
    samples = [phi.copy()]
    total = np.zeros_like(lam)
    for c in qbar:
        s = lam - c
        C, S = _cell_functions(s, hs)
        if norm:
            Iss = _sin_square_integral(s, hs, C, S)
            Icc = hs / 2 + C * S / 2
            Ics = S * S / 2
        for _ in range(substeps):
            if norm:
                total += phi * phi * Icc + dphi * dphi * Iss + 2 * phi * dphi * Ics
            phi, dphi = C * phi + S * dphi, -s * S * phi + C * dphi
            samples.append(phi.copy())
    out = np.array(samples)
    if norm:
        return out, dphi, total
    return out, dphi


def count_zeros(qbar: np.ndarray, h: float, lam) -> np.ndarray:
    """Number of zeros of phi(., lam) in (0, L], i.e. eigenvalues below lam."""
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    k_max = math.sqrt(max(float(np.max(lam - qbar.min())), 0.0))
    substeps = max(1, math.ceil(k_max * h))
    phi, _ = shoot(qbar, h, lam, substeps)
    sign = np.sign(phi[1:])
    return np.sum(sign[1:] * sign[:-1] < 0, axis=0)


@dataclass(frozen=True)
class SpectralData:
    length: float
    eigenvalues: np.ndarray
    weights: np.ndarray

    @property
    def n_max(self) -> int:
        return self.eigenvalues.size

    @property
    def reference_eigenvalues(self) -> np.ndarray:
        n = np.arange(1, self.n_max + 1)
        return (n * np.pi / self.length) ** 2

    @property
    def reference_weights(self) -> np.ndarray:
        return 2 * self.reference_eigenvalues / self.length

    def to_csv(self, path, comment=None):
        n = np.arange(1, self.n_max + 1)
        with open(path, "w") as fh:
            if comment:
                for line in str(comment).splitlines():
                    fh.write(f"# {line}\n")
            fh.write("n,lambda,alpha,lambda0,alpha0\n")
            for row in zip(n, self.eigenvalues, self.weights,
                           self.reference_eigenvalues, self.reference_weights):
                fh.write(f"{row[0]}," + ",".join(repr(float(v)) for v in row[1:]) + "\n")
        return path


def dirichlet_eigs(q: PotentialSample, length: float | None = None, n_max: int = 50,
                   rel_tol: float = REL_TOL) -> SpectralData:
    """First n_max Dirichlet eigenvalues on [0, L] and their norming weights."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if length is None:
        length = q.grid.length
    qbar, h = cell_potential(q, length)
    n = np.arange(1, n_max + 1)
    ref = (n * np.pi / length) ** 2
    # comparison with constant potentials brackets every eigenvalue
    lo = ref + qbar.min() - 1.0
    hi = ref + qbar.max() + 1.0
    if np.any(count_zeros(qbar, h, lo) > n - 1) or np.any(count_zeros(qbar, h, hi) < n):
        bad = np.flatnonzero((count_zeros(qbar, h, lo) > n - 1) | (count_zeros(qbar, h, hi) < n))
        raise EigensolverError(f"bracketing failed for eigenvalue index {int(n[bad[0]])}")
    for _ in range(200):
        width = hi - lo
        if np.all(width <= rel_tol * np.maximum(1.0, np.abs(hi))):
            break
        mid = 0.5 * (lo + hi)
        above = count_zeros(qbar, h, mid) >= n
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
    else:
        bad = int(np.argmax((hi - lo) / np.maximum(1.0, np.abs(hi))))
        raise EigensolverError(f"bisection did not converge for eigenvalue index {bad + 1}")
    lam = 0.5 * (lo + hi)
    if np.any(np.diff(lam) <= 0):
        raise EigensolverError("eigenvalues are not strictly increasing")
    _, _, norm = shoot(qbar, h, lam, norm=True)
    return SpectralData(float(length), lam, 1.0 / norm)


def _sinc_sqrt(lam, x):
    """sin(sqrt(lam) x) / sqrt(lam), continued to lam <= 0."""
    lam = np.asarray(lam, dtype=float)[:, None]
    x = np.asarray(x, dtype=float)[None, :]
    out = np.broadcast_to(x, (lam.shape[0], x.shape[1])).copy()
    k = np.sqrt(np.abs(lam[:, 0]))
    pos = lam[:, 0] > 0
    neg = lam[:, 0] < 0
    out[pos] = np.sin(k[pos, None] * x) / k[pos, None]
    out[neg] = np.sinh(k[neg, None] * x) / k[neg, None]
    return out


def ct_from_sigma(sd: SpectralData, horizon: float, n_points: int) -> ConnectingKernel:
    """Partial sum of c^T(s, t) = int sin(sqrt(lam)(T-t)) sin(sqrt(lam)(T-s)) / lam d sigma_d."""
    if horizon > sd.length * (1 + 1e-12):
        raise ValueError(f"horizon {horizon} exceeds the interval length {sd.length}")
    grid = UniformGrid(n_points, horizon)
    tau = horizon - grid.x
    G = _sinc_sqrt(sd.eigenvalues, tau)
    G0 = _sinc_sqrt(sd.reference_eigenvalues, tau)
    c = G.T @ (sd.weights[:, None] * G) - G0.T @ (sd.reference_weights[:, None] * G0)
    c = 0.5 * (c + c.T)
    return ConnectingKernel(horizon, grid, c)


def relabel_spectral_F(sd: SpectralData, horizon: float, n_points: int) -> np.ndarray:
    """F(x, t) = int sin(sqrt(lam) x) sin(sqrt(lam) t) / lam d sigma_d on [0, T]^2."""
    return ct_from_sigma(sd, horizon, n_points).matrix[::-1, ::-1].copy()


def r_from_sigma_integrated(sd: SpectralData, horizon: float, n_points: int):
    """t -> int_0^{2t} r on [0, T], as twice the spectral diagonal c^T(T - t, T - t)."""
    grid = UniformGrid(n_points, horizon)
    t = grid.x
    G = _sinc_sqrt(sd.eigenvalues, t)
    G0 = _sinc_sqrt(sd.reference_eigenvalues, t)
    diag = sd.weights @ (G * G) - sd.reference_weights @ (G0 * G0)
    return grid, 2.0 * diag


def r_from_sigma_display(sd: SpectralData, horizon: float, n_points: int):
    """Pointwise r on [0, 2T] by differencing the integrated form.  Not certified:
    the pointwise spectral series only converges almost everywhere."""
    grid, cum = r_from_sigma_integrated(sd, horizon, n_points)
    # d/dt of int_0^{2t} r is 2 r(2t)
    return 2 * grid.x, 0.5 * np.gradient(cum, grid.h, edge_order=2)


# --- m-function --------------------------------------------------------------


@dataclass(frozen=True)
class MFunctionSample:
    k: np.ndarray
    m: np.ndarray
    length: float
    boundary: str = "dirichlet"

    def to_csv(self, path, comment=None):
        with open(path, "w") as fh:
            if comment:
                for line in str(comment).splitlines():
                    fh.write(f"# {line}\n")
            fh.write("k,m\n")
            for k, m in zip(self.k, self.m):
                fh.write(f"{float(k)!r},{float(m)!r}\n")
        return path


def m_function(q: PotentialSample, length: float | None = None, k_values=(1.0,)) -> MFunctionSample:
    """m(-k^2) = psi'(0)/psi(0), with psi(L) = 0, psi'(L) = -1, by fixed-step RK4."""
    k_values = np.atleast_1d(np.asarray(k_values, dtype=float))
    if np.any(k_values <= 0):
        raise ValueError("k values must be positive")
    if length is None:
        length = q.grid.length
    n = q.grid.index_of(length)
    h = q.grid.h
    vals = q.values[: n + 1]
    mid = 0.5 * (vals[:-1] + vals[1:])
    k2 = k_values**2
    psi = np.zeros_like(k_values)
    dpsi = -np.ones_like(k_values)
    peak = np.zeros_like(k_values)
    for i in range(n, 0, -1):
        # step from x_i to x_{i-1}, i.e. dx = -h
        qa, qm, qb = vals[i], mid[i - 1], vals[i - 1]
        d = -h
        k1p, k1d = dpsi, (qa + k2) * psi
        k2p, k2d = dpsi + 0.5 * d * k1d, (qm + k2) * (psi + 0.5 * d * k1p)
        k3p, k3d = dpsi + 0.5 * d * k2d, (qm + k2) * (psi + 0.5 * d * k2p)
        k4p, k4d = dpsi + d * k3d, (qb + k2) * (psi + d * k3p)
        psi = psi + d / 6 * (k1p + 2 * k2p + 2 * k3p + k4p)
        dpsi = dpsi + d / 6 * (k1d + 2 * k2d + 2 * k3d + k4d)
        scale = np.maximum(np.abs(psi), np.abs(dpsi))
        peak = np.maximum(peak, scale)
        big = scale > 1e100
        if np.any(big):
            psi[big] /= scale[big]
            dpsi[big] /= scale[big]
            peak[big] /= scale[big]
    close = np.abs(psi) < 1e-12 * peak
    if np.any(close):
        raise PoleProximityError(
            f"psi(0) vanishes (m has a pole) near k = {k_values[close].tolist()}"
        )
    return MFunctionSample(k_values, dpsi / psi, float(length))


def laplace_piecewise_linear(values: np.ndarray, step: float, rate: float) -> float:
    """int_0^{(n-1) step} f(t) exp(-rate t) dt for the piecewise-linear interpolant of f."""
    t0 = np.arange(values.size - 1) * step
    a = values[:-1]
    b = values[1:]
    z = rate * step
    e0 = np.exp(-rate * t0)
    # f = a (1 - u) + b u on each cell, t = t0 + u step
    if z < 1e-4:
        w_a = 0.5 - z / 6 + z * z / 24
        w_b = 0.5 - z / 3 + z * z / 8
    else:
        ez = math.exp(-z)
        w_a = (z - 1 + ez) / (z * z)
        w_b = (1 - ez * (1 + z)) / (z * z)
    return float(step * np.sum(e0 * (a * w_a + b * w_b)))


@dataclass(frozen=True)
class AmplitudeCheck:
    k: np.ndarray
    residual: np.ndarray
    floor: np.ndarray
    flagged: np.ndarray
    slope: float
    intercept: float

    def to_dict(self):
        return {
            "k": self.k.tolist(), "residual": self.residual.tolist(),
            "floor": self.floor.tolist(), "flagged": self.flagged.tolist(),
            "slope": self.slope, "intercept": self.intercept,
        }


def _residuals(q: PotentialSample, length: float, k_values: np.ndarray):
    r = response_function(q, length)
    A = -2.0 * r.values  # A at t = j h/2 on [0, L]
    m = m_function(q, length, k_values).m
    integral = np.array([laplace_piecewise_linear(A, r.h / 2, 2 * k) for k in k_values])
    return m + k_values + integral, m


def a_amplitude_check(q: PotentialSample, length: float | None = None, k_values=(5.0,),
                      floor_factor: float = 3.0) -> AmplitudeCheck:
    """rho(k) = m(-k^2) + k + int_0^L A(t) e^{-2tk} dt with A(t) = -2 r(2t).

    The discretization floor is estimated by repeating the computation on
    every other grid node; residuals below ``floor_factor`` times the floor
    (or near machine precision) are flagged and left out of the
    log-linear fit.
    """
    if length is None:
        length = q.grid.length
    k_values = np.atleast_1d(np.asarray(k_values, dtype=float))
    q = q.restrict(length)
    rho, m = _residuals(q, length, k_values)
    floor = np.full_like(rho, np.finfo(float).eps) * (np.abs(m) + k_values) * 10
    if q.grid.n_intervals % 2 == 0 and q.grid.n_intervals >= 4:
        coarse = PotentialSample(UniformGrid(q.grid.n_intervals // 2 + 1, length), q.values[::2])
        rho2, _ = _residuals(coarse, length, k_values)
        floor = np.maximum(floor, np.abs(rho2 - rho) / 3)
    flagged = np.abs(rho) <= floor_factor * floor
    good = ~flagged & (rho != 0)
    if good.sum() >= 3:
        slope, intercept = np.polyfit(k_values[good], np.log(np.abs(rho[good])), 1)
    else:
        slope = intercept = float("nan")
    return AmplitudeCheck(k_values, rho, floor, flagged, float(slope), float(intercept))

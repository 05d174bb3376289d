"""Uniform grids, sampled functions, quadrature and CSV I/O."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError

SPACING_RTOL = 1e-9


@dataclass(frozen=True)
class UniformGrid:
    """Nodes ``i * h`` on ``[0, length]``."""

    n_points: int
    length: float

    def __post_init__(self):
        if int(self.n_points) != self.n_points or self.n_points < 3:
            raise ValueError(f"n_points must be an integer >= 3, got {self.n_points}")
        if not (self.length > 0 and math.isfinite(self.length)):
            raise ValueError(f"length must be positive, got {self.length}")
        object.__setattr__(self, "n_points", int(self.n_points))
        object.__setattr__(self, "length", float(self.length))

    @classmethod
    def from_step(cls, length: float, h: float) -> "UniformGrid":
        n = round(length / h)
        if abs(n * h - length) > 1e-9 * max(length, 1.0):
            raise ValueError(f"step {h} does not divide length {length}")
        return cls(n + 1, length)

    @property
    def h(self) -> float:
        return self.length / (self.n_points - 1)

    @property
    def n_intervals(self) -> int:
        return self.n_points - 1

    @property
    def x(self) -> np.ndarray:
        # i*h rather than linspace so node i is exactly i*h
        return np.arange(self.n_points) * self.h

    def index_of(self, value: float) -> int:
        i = round(value / self.h)
        if abs(i * self.h - value) > 1e-9 * max(self.length, 1.0) or not 0 <= i < self.n_points:
            raise ValueError(f"{value} is not a node of {self}")
        return i

    def matches(self, other: "UniformGrid") -> bool:
        return self.n_points == other.n_points and math.isclose(
            self.length, other.length, rel_tol=1e-12
        )


@dataclass(frozen=True)
class PotentialSample:
    grid: UniformGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.n_points,):
            raise ValueError(
                f"expected {self.grid.n_points} values, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("potential values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, func, length: float, n_points: int) -> "PotentialSample":
        grid = UniformGrid(n_points, length)
        return cls(grid, np.broadcast_to(func(grid.x), grid.x.shape))

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def __call__(self, x) -> np.ndarray:
        return np.interp(x, self.grid.x, self.values)

    def restrict(self, length: float) -> "PotentialSample":
        """Samples on ``[0, length]``; ``length`` must be a node."""
        n = self.grid.index_of(length)
        return PotentialSample(UniformGrid(n + 1, n * self.grid.h), self.values[: n + 1])


@dataclass(frozen=True)
class ResponseSample:
    """Response function r sampled on ``[0, 2T]``."""

    horizon: float
    grid: UniformGrid
    values: np.ndarray

    def __post_init__(self):
        if not math.isclose(self.grid.length, 2 * self.horizon, rel_tol=1e-12):
            raise ValueError(
                f"response grid covers [0, {self.grid.length}], expected [0, {2 * self.horizon}]"
            )
        if self.grid.n_intervals % 2:
            raise ValueError("response grid needs an even number of intervals")
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.n_points,):
            raise ValueError("values do not match grid")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_values(cls, values, horizon: float) -> "ResponseSample":
        values = np.asarray(values, dtype=float)
        return cls(horizon, UniformGrid(values.size, 2 * horizon), values)

    @property
    def h(self) -> float:
        return self.grid.h

    @property
    def t(self) -> np.ndarray:
        return self.grid.x

    def restrict(self, horizon: float) -> "ResponseSample":
        """Response on ``[0, 2*horizon]`` for a shorter horizon."""
        n = self.grid.index_of(2 * horizon)
        return ResponseSample(
            horizon, UniformGrid(n + 1, n * self.grid.h), self.values[: n + 1]
        )


def trapezoid_weights(n_points: int, h: float) -> np.ndarray:
    if n_points < 1:
        raise ValueError("need at least one node")
    w = np.full(n_points, h)
    w[0] = w[-1] = h / 2
    if n_points == 1:
        w[0] = 0.0
    return w


def trapezoid(values, h: float) -> float:
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or values.size < 2:
        raise ValueError("trapezoid needs at least two samples")
    return float(h * (values.sum() - 0.5 * (values[0] + values[-1])))


def cumulative_trapezoid(values, h: float, axis: int = -1) -> np.ndarray:
    """Running trapezoid integral with a leading zero (same shape as input)."""
    values = np.asarray(values, dtype=float)
    v = np.moveaxis(values, axis, -1)
    out = np.zeros_like(v)
    out[..., 1:] = np.cumsum(0.5 * h * (v[..., 1:] + v[..., :-1]), axis=-1)
    return np.moveaxis(out, -1, axis)


def second_derivative(values, h: float) -> np.ndarray:
    """Second differences; one-sided second-order stencils at the ends."""
    f = np.asarray(values, dtype=float)
    if f.ndim != 1 or f.size < 3:
        raise ValueError("second_derivative needs at least three samples")
    d2 = np.empty_like(f)
    d2[1:-1] = (f[:-2] - 2 * f[1:-1] + f[2:]) / h**2
    if f.size >= 4:
        d2[0] = (2 * f[0] - 5 * f[1] + 4 * f[2] - f[3]) / h**2
        d2[-1] = (2 * f[-1] - 5 * f[-2] + 4 * f[-3] - f[-4]) / h**2
    else:
        d2[0] = d2[-1] = d2[1]
    return d2


# --- CSV -------------------------------------------------------------------


def _data_rows(path):
    """Yield (line_number, fields) skipping '#' comments and blank lines."""
    with open(path, newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            yield lineno, next(csv.reader([stripped]))


def read_series_csv(path, columns=None):
    """Read a two-column uniform series; returns ``(grid, values, header)``."""
    rows = _data_rows(path)
    try:
        lineno, header = next(rows)
    except StopIteration:
        raise FormatError(f"{path}: empty file") from None
    header = [h.strip() for h in header]
    allowed = [columns] if columns else [("x", "q"), ("t", "value")]
    if tuple(header) not in allowed:
        raise FormatError(f"expected header {' or '.join(','.join(a) for a in allowed)}, "
                          f"got {','.join(header)}", row=lineno)
    xs, vals = [], []
    for lineno, fields in rows:
        if len(fields) != 2:
            raise FormatError(f"expected 2 columns, got {len(fields)}", row=lineno)
        try:
            x, v = float(fields[0]), float(fields[1])
        except ValueError:
            raise FormatError(f"non-numeric entry {fields!r}", row=lineno) from None
        if not (math.isfinite(x) and math.isfinite(v)):
            raise FormatError("NaN or infinite value", row=lineno)
        if xs:
            step = x - xs[-1]
            if step <= 0:
                raise FormatError("abscissae must be strictly increasing", row=lineno)
            if len(xs) >= 2:
                ref = xs[1] - xs[0]
                if abs(step - ref) > SPACING_RTOL * ref:
                    raise FormatError(
                        f"non-uniform spacing {step!r} (expected {ref!r})", row=lineno
                    )
        elif x != 0.0:
            raise FormatError("series must start at 0", row=lineno)
        xs.append(x)
        vals.append(v)
    if len(xs) < 3:
        raise FormatError(f"{path}: need at least 3 data rows")
    return UniformGrid(len(xs), xs[-1]), np.array(vals), tuple(header)


def read_potential_csv(path) -> PotentialSample:
    grid, values, _ = read_series_csv(path, columns=("x", "q"))
    return PotentialSample(grid, values)


def read_response_csv(path) -> ResponseSample:
    grid, values, _ = read_series_csv(path, columns=("t", "value"))
    if grid.n_intervals % 2:
        raise FormatError(f"{path}: response needs an even number of intervals")
    return ResponseSample(grid.length / 2, grid, values)


def _comment_lines(fh, comment):
    if comment:
        for line in str(comment).splitlines():
            fh.write(f"# {line}\n")


def write_series_csv(path, grid: UniformGrid, values, header=("t", "value"), comment=None):
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.n_points,):
        raise ValueError("values do not match grid")
    path = Path(path)
    with open(path, "w", newline="") as fh:
        _comment_lines(fh, comment)
        fh.write(",".join(header) + "\n")
        for x, v in zip(grid.x, values):
            fh.write(f"{float(x)!r},{float(v)!r}\n")
    return path


def write_potential_csv(path, q: PotentialSample, comment=None):
    return write_series_csv(path, q.grid, q.values, header=("x", "q"), comment=comment)


def write_matrix_csv(path, row_coords, col_coords, matrix, comment=None, corner="t\\s"):
    """Dense matrix with the first row/column holding grid coordinates."""
    matrix = np.asarray(matrix, dtype=float)
    with open(path, "w", newline="") as fh:
        _comment_lines(fh, comment)
        fh.write(corner + "," + ",".join(repr(float(c)) for c in col_coords) + "\n")
        for c, row in zip(row_coords, matrix):
            fh.write(repr(float(c)) + "," + ",".join(repr(float(v)) for v in row) + "\n")
    return Path(path)


def read_matrix_csv(path):
    rows = list(_data_rows(path))
    if not rows:
        raise FormatError(f"{path}: empty file")
    cols = np.array([float(v) for v in rows[0][1][1:]])
    data = np.array([[float(v) for v in fields] for _, fields in rows[1:]])
    return data[:, 0], cols, data[:, 1:]

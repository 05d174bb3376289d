"""Named test potentials and the ``--potential`` parser."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .grids import PotentialSample, read_potential_csv

BUILTINS = ("zero", "const:<c>", "sine", "step")


def builtin(name: str, length: float):
    """Return a vectorised callable for a named potential."""
    if name == "zero":
        return lambda x: np.zeros_like(x)
    if name.startswith("const:"):
        try:
            c = float(name.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"bad constant in {name!r}") from None
        return lambda x: np.full_like(x, c)
    if name == "sine":
        return lambda x: np.sin(np.pi * x) + 0.5
    if name == "step":
        return lambda x: np.where(x <= length / 2, 1.0, 0.0)
    raise KeyError(name)


def load_potential(source: str, length: float, n_points: int) -> PotentialSample:
    """A builtin sampled on ``n_points`` nodes of [0, length], or a CSV file."""
    try:
        func = builtin(source, length)
    except KeyError:
        path = Path(source)
        if not path.exists():
            raise ValueError(f"unknown potential {source!r}; builtins are {', '.join(BUILTINS)} "
                             "or a CSV path") from None
        q = read_potential_csv(path)
        if q.grid.length < length * (1 - 1e-12):
            raise ValueError(f"{path} covers [0, {q.grid.length}], need [0, {length}]")
        return q.restrict(length) if q.grid.length > length else q
    return PotentialSample.from_function(func, length, n_points)

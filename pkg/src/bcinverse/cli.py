"""Batch front end: forward, invert, spectral, roundtrip, compare.

Every output file starts with a ``# config-hash=<sha256>`` comment (JSON
outputs carry a ``config_hash`` key).  The hash covers the numerical
configuration, not the output directory, so identical runs produce
bit-identical files wherever they are written.

Exit codes: 0 ok, 2 bad configuration or input, 3 solver failure,
4 non-positive connecting operator under ``--strict-positivity``.
"""
from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import errors
from .connecting import build_connecting_kernel, positivity_margin
from .forward import response_function
from .goursat import solve_goursat_picard
from .grids import (
    ResponseSample,
    UniformGrid,
    read_response_csv,
    write_matrix_csv,
    write_series_csv,
)
from .inverse_bc import RecoveryResult, amplitude_from_response, recover_q_bc, remling_solve
from .inverse_gl import gl_classical_recover, gl_local_solve, relabel_to_classical, simon_flow
from .potentials import load_potential
from .spectral import ct_from_sigma, dirichlet_eigs, m_function

log = logging.getLogger("bcinverse")

COMMANDS = ("forward", "invert", "spectral", "roundtrip", "compare")
METHODS = ("bc", "remling", "gl", "gl-classical", "simon")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_POSITIVITY = 0, 2, 3, 4

SOLVER_ERRORS = (
    errors.ConvergenceError, errors.SolvabilityError, errors.EigensolverError,
    errors.FlowError, errors.PoleProximityError, np.linalg.LinAlgError, ArithmeticError,
)


class ConfigError(ValueError):
    pass


class PositivityViolation(RuntimeError):
    def __init__(self, report):
        super().__init__(f"connecting operator is not positive (min eig {report.min_eig:.6e})")
        self.report = report


@dataclass
class RunConfig:
    command: str
    potential: str | None = None
    response: str | None = None
    L: float = 1.0
    T: float | None = None
    n: int = 201
    h: float | None = None
    tol: float = 1e-12
    method: str = "bc"
    n_max: int = 50
    k_min: float = 5.0
    k_max: float = 20.0
    k_count: int = 16
    out: str = "."
    strict_positivity: bool = False

    @property
    def methods(self) -> list[str]:
        return [m.strip() for m in self.method.split(",") if m.strip()]

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.L <= 0:
            raise ConfigError("L must be positive")
        if self.h is not None:
            if self.h <= 0:
                raise ConfigError("h must be positive")
            n_int = round(self.L / self.h)
            if n_int < 2 or abs(n_int * self.h - self.L) > 1e-9 * self.L:
                raise ConfigError(f"h={self.h} does not divide L={self.L}")
            self.n = n_int + 1
            self.h = None
        if self.n < 3:
            raise ConfigError("n must be at least 3")
        if self.T is not None and self.T <= 0:
            raise ConfigError("T must be positive")
        if self.T is not None and self.command != "invert" and self.T > self.L * (1 + 1e-12):
            raise ConfigError(f"T={self.T} exceeds L={self.L}")
        if self.tol <= 0:
            raise ConfigError("tol must be positive")
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise ConfigError(f"unknown method(s) {bad}; choose from {', '.join(METHODS)}")
        if self.command in ("invert", "roundtrip") and len(self.methods) != 1:
            raise ConfigError(f"{self.command} takes a single method")
        if self.command == "compare" and len(self.methods) == 1:
            self.method = "bc,remling,gl"
        if self.command in ("forward", "spectral", "roundtrip") and not self.potential:
            raise ConfigError(f"{self.command} needs --potential")
        if self.command == "invert" and not self.response:
            raise ConfigError("invert needs --response")
        if self.command == "compare" and not (self.response or self.potential):
            raise ConfigError("compare needs --response or --potential")
        if self.n_max < 1 or self.k_count < 1 or not 0 < self.k_min <= self.k_max:
            raise ConfigError("need n_max >= 1, k_count >= 1 and 0 < k_min <= k_max")
        return self

    def hash(self) -> str:
        data = dataclasses.asdict(self)
        data.pop("out")
        blob = json.dumps(data, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()


# --- argument handling ---------------------------------------------------------

_FLAG_FIELDS = {
    "potential": str, "response": str, "L": float, "T": float, "n": int, "h": float,
    "tol": float, "method": str, "n_max": int, "k_min": float, "k_max": float,
    "k_count": int, "out": str,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bcinverse", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    for name, typ in _FLAG_FIELDS.items():
        parser.add_argument("--" + name.replace("_", "-"), dest=name, type=typ, default=None)
    parser.add_argument("--strict-positivity", action="store_true", default=None)
    parser.add_argument("--config", default=None, help="JSON file; flags override its keys")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    values: dict = {}
    if ns.config:
        try:
            with open(ns.config) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {ns.config}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        known = {f.name for f in dataclasses.fields(RunConfig)} - {"command"}
        unknown = set(loaded) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        values.update(loaded)
    for name in list(_FLAG_FIELDS) + ["strict_positivity"]:
        v = getattr(ns, name)
        if v is not None:
            values[name] = v
    try:
        cfg = RunConfig(command=ns.command, **values)
        for f in dataclasses.fields(RunConfig):
            typ = _FLAG_FIELDS.get(f.name)
            v = getattr(cfg, f.name)
            if typ is not None and v is not None:
                setattr(cfg, f.name, typ(v))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return cfg.validate()


# --- pipeline pieces -------------------------------------------------------------


def _header(cfg: RunConfig, what: str) -> str:
    return f"config-hash={cfg.hash()}\n{what}"


def _write_json(path: Path, cfg: RunConfig, payload: dict) -> Path:
    payload = {"config_hash": cfg.hash(), **payload}
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if hasattr(obj, "to_dict"):
        return _jsonable(obj.to_dict())
    return obj


def _potential(cfg: RunConfig):
    try:
        return load_potential(cfg.potential, cfg.L, cfg.n)
    except (ValueError, OSError) as exc:
        raise ConfigError(str(exc)) from exc


def simulate(cfg: RunConfig):
    q = _potential(cfg)
    T = cfg.L if cfg.T is None else cfg.T
    kernel = solve_goursat_picard(q, T, tol=cfg.tol)
    return q, kernel, response_function(q, kernel.horizon, tol=cfg.tol, kernel=kernel)


def _response(cfg: RunConfig) -> ResponseSample:
    try:
        r = read_response_csv(cfg.response)
    except (ValueError, OSError) as exc:
        raise ConfigError(f"cannot read response: {exc}") from exc
    if cfg.T is not None:
        try:
            r = r.restrict(cfg.T)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    return r


def invert(r: ResponseSample, method: str, strict: bool = False) -> RecoveryResult:
    """Run one recovery method on the whole horizon of ``r``."""
    T = r.horizon
    ck = build_connecting_kernel(r, T)
    report = positivity_margin(ck)
    if strict and not report.positive:
        raise PositivityViolation(report)
    if method == "bc":
        res = recover_q_bc(r, T)
    elif method == "remling":
        sol = remling_solve(r, T, "y")
        res = RecoveryResult(sol.grid, sol.q, np.where(np.isfinite(sol.q), 0, -1), "remling",
                             {"max_residual": sol.max_residual})
    elif method == "gl":
        _, res = gl_local_solve(ck)
    elif method == "gl-classical":
        _, res = gl_classical_recover(relabel_to_classical(ck), ck.grid)
    elif method == "simon":
        A0 = amplitude_from_response(r)
        res = simon_flow(A0, T, r.h / 2)
    else:
        raise ConfigError(f"unknown method {method!r}")
    res.diagnostics.setdefault("positivity", report)
    return res


def _on_grid(res: RecoveryResult, grid: UniformGrid) -> np.ndarray:
    if res.grid.matches(grid):
        return res.values
    return np.interp(grid.x, res.grid.x, res.values)


def error_report(q, res: RecoveryResult) -> dict:
    truth = q(res.grid.x)
    ok = np.isfinite(res.values)
    diff = res.values[ok] - truth[ok]
    scale_inf = max(float(np.max(np.abs(truth[ok]))), 1e-300)
    scale_l2 = float(np.sqrt(np.sum(truth[ok] ** 2)))
    out = {
        "method": res.method,
        "abs_linf": float(np.max(np.abs(diff))),
        "rel_linf": float(np.max(np.abs(diff)) / scale_inf),
        "rel_l2": float(np.sqrt(np.sum(diff**2)) / scale_l2) if scale_l2 > 0 else None,
        "n_nodes": int(ok.sum()),
        "gaps": res.gaps.tolist(),
    }
    interior = ok & (res.grid.x >= 0.1 * res.grid.length)
    if interior.any():
        d = res.values[interior] - truth[interior]
        out["rel_linf_interior"] = float(np.max(np.abs(d)) / max(np.max(np.abs(truth[interior])), 1e-300))
    return out


# --- commands --------------------------------------------------------------------


def cmd_forward(cfg: RunConfig, out: Path) -> dict:
    _, kernel, r = simulate(cfg)
    write_series_csv(out / "r.csv", r.grid, r.values, comment=_header(cfg, "response r(t) on [0, 2T]"))
    kernel.to_csv(out / "w-kernel.csv", comment=_header(cfg, "wave kernel w(x, t)"))
    return {"picard_iterations": kernel.iterations, "tail_bound": kernel.tail_bound}


def cmd_invert(cfg: RunConfig, out: Path, r: ResponseSample | None = None) -> RecoveryResult:
    if r is None:
        r = _response(cfg)
    res = invert(r, cfg.methods[0], cfg.strict_positivity)
    write_series_csv(out / "q_hat.csv", res.grid, res.values, header=("x", "q"),
                     comment=_header(cfg, f"recovered potential, method={res.method}"))
    _write_json(out / "diagnostics.json", cfg, res.diagnostics_dict())
    return res


def cmd_spectral(cfg: RunConfig, out: Path) -> dict:
    q = _potential(cfg)
    sd = dirichlet_eigs(q, cfg.L, cfg.n_max)
    sd.to_csv(out / "spectral.csv", comment=_header(cfg, "Dirichlet eigenvalues and norming constants"))
    k = np.linspace(cfg.k_min, cfg.k_max, cfg.k_count)
    m_function(q, cfg.L, k).to_csv(out / "m.csv", comment=_header(cfg, "m(-k^2)"))
    T = cfg.L if cfg.T is None else cfg.T
    n_pts = q.grid.index_of(T) + 1
    ck = ct_from_sigma(sd, T, n_pts)
    write_matrix_csv(out / "ct_spectral.csv", ck.grid.x, ck.grid.x, ck.matrix,
                     comment=_header(cfg, f"c^T from spectral partial sums, n_max={cfg.n_max}"))
    return {"n_max": sd.n_max, "lambda_1": float(sd.eigenvalues[0])}


def cmd_roundtrip(cfg: RunConfig, out: Path) -> dict:
    q, kernel, r = simulate(cfg)
    write_series_csv(out / "r.csv", r.grid, r.values, comment=_header(cfg, "response r(t) on [0, 2T]"))
    res = cmd_invert(cfg, out, r)
    report = error_report(q, res)
    _write_json(out / "error_report.json", cfg, report)
    return report


def cmd_compare(cfg: RunConfig, out: Path) -> dict:
    r = _response(cfg) if cfg.response else simulate(cfg)[2]
    grid = UniformGrid(round(r.horizon / r.h) + 1, r.horizon)
    cols = {}
    for m in cfg.methods:
        cols[m] = _on_grid(invert(r, m, cfg.strict_positivity), grid)
    table = np.column_stack(list(cols.values()))
    spread = np.nanmax(table, axis=1) - np.nanmin(table, axis=1)
    with open(out / "compare.csv", "w") as fh:
        for line in _header(cfg, "per-node recovered q and max pairwise disagreement").splitlines():
            fh.write(f"# {line}\n")
        fh.write("x," + ",".join(cols) + ",max_disagreement\n")
        for i, x in enumerate(grid.x):
            fh.write(repr(float(x)) + "," + ",".join(repr(float(v)) for v in table[i])
                     + f",{float(spread[i])!r}\n")
    names = list(cols)
    pairs = {f"{a}|{b}": float(np.nanmax(np.abs(cols[a] - cols[b])))
             for i, a in enumerate(names) for b in names[i + 1:]}
    _write_json(out / "compare.json", cfg, {"methods": names, "max_abs_disagreement": pairs})
    return pairs


def run(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        if cfg.command == "forward":
            info = cmd_forward(cfg, out)
        elif cfg.command == "invert":
            info = cmd_invert(cfg, out).diagnostics_dict()
        elif cfg.command == "spectral":
            info = cmd_spectral(cfg, out)
        elif cfg.command == "roundtrip":
            info = cmd_roundtrip(cfg, out)
        else:
            info = cmd_compare(cfg, out)
    except ConfigError as exc:
        log.error("bad configuration: %s", exc)
        return EXIT_CONFIG
    except PositivityViolation as exc:
        _write_json(out / "error.json", cfg, {"error": "PositivityViolation", "message": str(exc),
                                              "positivity": exc.report})
        log.error("%s", exc)
        return EXIT_POSITIVITY
    except SOLVER_ERRORS as exc:
        payload = {"error": type(exc).__name__, "message": str(exc)}
        for attr in ("achieved", "x_reached", "row"):
            if getattr(exc, attr, None) is not None:
                payload[attr] = getattr(exc, attr)
        _write_json(out / "error.json", cfg, payload)
        log.error("solver failure: %s: %s", type(exc).__name__, exc)
        return EXIT_SOLVER
    log.info("%s done: %s", cfg.command, json.dumps(_jsonable(info), sort_keys=True)[:500])
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = config_from_args(ns)
    except ConfigError as exc:
        log.error("bad configuration: %s", exc)
        return EXIT_CONFIG
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())

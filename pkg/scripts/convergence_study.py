"""Recovery error of every method under grid refinement.

    python3 scripts/convergence_study.py --potential sine --out runs/conv
"""
import argparse
import json
import time
from pathlib import Path

import numpy as np

from bcinverse.cli import invert
from bcinverse.forward import response_function
from bcinverse.potentials import load_potential

METHODS = ("bc", "remling", "gl", "gl-classical", "simon")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--potential", default="sine")
    ap.add_argument("--T", type=float, default=1.0)
    ap.add_argument("--steps", type=int, nargs="+", default=[50, 100, 200, 400])
    ap.add_argument("--window", type=float, nargs=2, default=[0.1, 0.9])
    ap.add_argument("--out", default="runs/convergence")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    rows = []
    for steps in args.steps:
        q = load_potential(args.potential, args.T, steps + 1)
        r = response_function(q, args.T)
        for method in METHODS:
            t0 = time.perf_counter()
            res = invert(r, method)
            dt = time.perf_counter() - t0
            x = res.grid.x
            sel = (x >= args.window[0] * args.T) & (x <= args.window[1] * args.T)
            err = float(np.nanmax(np.abs(res.values[sel] - q(x[sel]))))
            rows.append({"h": args.T / steps, "method": method, "linf": err, "seconds": dt})
            print(f"h=1/{steps:<4d} {method:<13s} err={err:.3e}  {dt:6.2f}s")

    by_method = {}
    for row in rows:
        by_method.setdefault(row["method"], []).append(row["linf"])
    rates = {m: [float(np.log2(a / b)) for a, b in zip(e, e[1:])] for m, e in by_method.items()}
    for m, r in rates.items():
        print(f"{m:<13s} observed orders: " + ", ".join(f"{v:.2f}" for v in r))
    (out / "convergence.json").write_text(json.dumps({"rows": rows, "orders": rates}, indent=2))


if __name__ == "__main__":
    main()

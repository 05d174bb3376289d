"""Residual of the A-amplitude Laplace relation for m(-k^2).

    python3 scripts/amplitude_decay.py --potential const:1 --out runs/amplitude
"""
import argparse
import json
from pathlib import Path

import numpy as np

from bcinverse.potentials import load_potential
from bcinverse.spectral import a_amplitude_check


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--potential", default="const:1")
    ap.add_argument("--L", type=float, default=1.0)
    ap.add_argument("--n", type=int, nargs="+", default=[201, 401, 801])
    ap.add_argument("--k", type=float, nargs=3, default=[5.0, 20.0, 16], metavar=("MIN", "MAX", "COUNT"))
    ap.add_argument("--out", default="runs/amplitude")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    k = np.linspace(args.k[0], args.k[1], int(args.k[2]))
    report = {}
    for n in args.n:
        chk = a_amplitude_check(load_potential(args.potential, args.L, n), args.L, k)
        report[n] = chk.to_dict()
        print(f"n={n:<5d} slope={chk.slope:.3f} (reference {-2 * args.L:.1f}), "
              f"{int((~chk.flagged).sum())} points above the floor")
        for kk, rho, fl in zip(chk.k, chk.residual, chk.flagged):
            print(f"    k={kk:6.2f}  rho={rho: .3e}{'  (floor)' if fl else ''}")
    (out / "amplitude.json").write_text(json.dumps(report, indent=2))


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Scan the contraction rate c over eps = delta for a few noise/drift pairs.

Infeasible values of eps show up as NaN.  Writes ``<out>/epsilon_scan.csv``.
"""

import argparse
import csv
import math
from pathlib import Path

import numpy as np

from levycouple.contraction import scan_epsilon
from levycouple.drift import DriftSpec
from levycouple.levy_measure import RadialLevyMeasure

CASES = {
    "stable1.5-linear": (RadialLevyMeasure.alpha_stable(1.5, 1), DriftSpec.linear(1.0)),
    "stable1.5-step": (RadialLevyMeasure.alpha_stable(1.5, 1),
                       DriftSpec.step(2 * math.sqrt(2), 1.0, C_L=0.0)),
    "stable1.5-double-well": (RadialLevyMeasure.alpha_stable(1.5, 1), DriftSpec.double_well(1.0)),
    "shell4-linear": (RadialLevyMeasure.shell_uniform(1.0, 4.0), DriftSpec.linear(1.0)),
}


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--eps", type=float, nargs="+",
                   default=list(np.round(np.linspace(0.1, 2.0, 20), 3)))
    p.add_argument("--out", default="runs/epsilon_scan")
    args = p.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    results = {name: dict(scan_epsilon(mu, dr, args.eps)) for name, (mu, dr) in CASES.items()}
    with open(out / "epsilon_scan.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epsilon"] + list(CASES))
        for e in args.eps:
            w.writerow([e] + [repr(results[n][float(e)]) for n in CASES])
    print(f"{'eps':>6} " + " ".join(f"{n:>22}" for n in CASES))
    for e in args.eps:
        print(f"{e:6.3f} " + " ".join(f"{results[n][float(e)]:22.5g}" for n in CASES))
    for n in CASES:
        vals = {e: c for e, c in results[n].items() if np.isfinite(c)}
        if vals:
            best = max(vals, key=vals.get)
            print(f"{n}: best c = {vals[best]:.5g} at eps = {best:g}")


if __name__ == "__main__":
    main()

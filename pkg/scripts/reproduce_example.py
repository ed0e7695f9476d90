#!/usr/bin/env python3
"""Constants for 1-d 1.5-stable noise with a step drift profile kappa = 2*sqrt(2)*1[r >= 1].

Prints the pipeline constants next to the closed-form values and writes
them to ``runs/example/example.json``.
"""

import argparse
import json
from pathlib import Path

from levycouple.cli import reproduce_example, write_json
from levycouple.contraction import PROOF, STATEMENT


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="runs/example")
    p.add_argument("--k-convention", choices=(PROOF, STATEMENT), default=PROOF)
    args = p.parse_args()
    rep = reproduce_example(args.k_convention)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "example.json", rep)
    pipe = rep["pipeline"]
    rows = [
        ("C_eps", pipe["C_eps"], rep["C_eps0_closed"]),
        ("C_delta", pipe["C_delta"], 32 / 3),
        ("R1", pipe["R1"], 1.0),
        ("c1", pipe["c1"], 2**0.5 / 2),
        ("K", pipe["K"], 1.0),
        ("c", pipe["c"], 2**0.5 / 4),
    ]
    print(f"{'constant':>10} {'pipeline':>14} {'closed form':>14}")
    for name, got, want in rows:
        print(f"{name:>10} {got:14.8f} {want:14.8f}")
    print(f"c >= c_floor = {rep['c_floor']:.6f}: {rep['c_floor_holds']}")
    print(json.dumps({"epsilon0": rep["epsilon0"]}))


if __name__ == "__main__":
    main()

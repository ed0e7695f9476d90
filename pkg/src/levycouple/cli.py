"""Command-line entry point: ``levycouple <subcommand> [--config PATH] ...``.

Exit codes: 0 success, 2 an assumption fails, 3 a verification verdict
fails, 1 anything else.  Every run writes ``manifest.json`` into its output
directory with the resolved configuration.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import contraction as ct
from . import drift as drift_mod
from . import metrics
from .config import RunConfig
from .coupling_sim import SimConfig, run_ensemble, simulate_coupled_pair
from .errors import FeasibilityError, LevyCoupleError
from .levy_measure import RadialLevyMeasure, TruncationParams

log = logging.getLogger("levycouple")

EXIT_OK = 0
EXIT_OTHER = 1
EXIT_FEASIBILITY = 2
EXIT_VERIFY = 3

EXAMPLE = {
    "alpha": 1.5,
    "epsilon": 0.5,
    "delta": 0.5,
    "R": 1.0,
    "M": 2.0 * math.sqrt(2.0),
}


def _setup_logging():
    level = os.environ.get("LEVYCOUPLE_LOG", "WARNING").upper()
    lvl = int(level) if level.isdigit() else getattr(logging, level, logging.WARNING)
    logging.basicConfig(level=lvl, format="%(levelname)s %(name)s: %(message)s")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serialisable: {type(o)}")


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _prepare(args):
    overrides = {}
    if args.out:
        overrides["output"] = {"dir": args.out}
    if args.seed is not None:
        overrides.setdefault("simulation", {})["base_seed"] = args.seed
    if args.threads is not None:
        overrides.setdefault("simulation", {})["threads"] = args.threads
    if args.k_convention:
        overrides["distance"] = {"k_convention": args.k_convention}
    cfg = RunConfig.load(args.config, overrides)
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    from . import __version__

    write_json(out / "manifest.json", {
        "command": args.command,
        "argv": sys.argv[1:],
        "config_source": cfg.source,
        "config": cfg.raw,
        "seed": cfg.section("simulation")["base_seed"],
        "version": __version__,
    })
    return cfg, out


def _distance(cfg):
    d = cfg.section("distance")
    kw = {}
    if "m" in d:
        kw["m"] = float(d["m"])
    return ct.distance_from_model(
        cfg.measure(), cfg.drift(), cfg.epsilon, cfg.delta,
        convention=cfg.convention, variance_fraction=float(d["variance_fraction"]),
        n_sub=int(d["n_sub"]), **kw,
    )


def _sim_config(cfg, df, measure=None, drift=None):
    s = cfg.section("simulation")
    return SimConfig(
        measure=measure or cfg.measure(), trunc=TruncationParams(df.m, df.eta),
        drift=drift or cfg.drift(), h=float(s["h"]), horizon=float(s["horizon"]),
        n_paths=int(s["n_paths"]), base_seed=int(s["base_seed"]),
        x0=np.asarray(s["x0"], dtype=float), y0=np.asarray(s["y0"], dtype=float),
        sample_times=tuple(s["sample_times"]),
        stop_after_coupling=bool(s["stop_after_coupling"]), blowup=float(s["blowup"]),
    )


def cmd_constants(args):
    cfg, out = _prepare(args)
    df = _distance(cfg)
    write_json(out / "constants.json", df.to_dict())
    print(json.dumps(df.to_dict(), indent=2, default=_json_default))
    return EXIT_OK


def cmd_build_distance(args):
    cfg, out = _prepare(args)
    df = _distance(cfg)
    write_json(out / "constants.json", df.to_dict())
    df.write_csv(out / "distance.csv")
    print(f"wrote {out / 'distance.csv'} and {out / 'constants.json'}")
    return EXIT_OK


def _write_traces(sim, out, n):
    for i in range(min(n, sim.n_paths)):
        path = simulate_coupled_pair(sim, i, record=True)
        with open(out / f"trace_{i:05d}.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time", "X", "Y", "absZ", "event"])
            for t, x, y, z, ev in path.trace_rows():
                w.writerow([repr(t), " ".join(map(repr, x)), " ".join(map(repr, y)), repr(z), ev])


def cmd_simulate(args):
    cfg, out = _prepare(args)
    df = _distance(cfg)
    sim = _sim_config(cfg, df)
    t0 = time.perf_counter()
    ens = run_ensemble(sim, threads=int(cfg.section("simulation")["threads"]))
    log.info("simulated %d paths in %.2f s", sim.n_paths, time.perf_counter() - t0)
    summary = ens.summary()
    summary["m"], summary["eta"] = df.m, df.eta
    write_json(out / "summary.json", summary)
    _write_traces(sim, out, int(cfg.section("simulation")["trace_paths"]))
    print(json.dumps(summary, indent=2, sort_keys=True, default=_json_default))
    return EXIT_OK


def cmd_verify(args):
    cfg, out = _prepare(args)
    df = _distance(cfg)
    v = cfg.section("verify")
    sim = _sim_config(cfg, df)
    if sim.n_paths == 0:
        raise LevyCoupleError("verify needs at least one path")
    ens = run_ensemble(sim, threads=int(cfg.section("simulation")["threads"]))
    c = df.c * float(v["c_scale"])
    report = metrics.contraction_report(
        ens, df, tol=float(v["tol"]), ef_tol=float(v["ef_tol"]),
        rate_fraction=float(v["rate_fraction"]), c=c,
    )
    payload = report.to_dict()
    payload["constants"] = df.to_dict()
    write_json(out / "report.json", payload)
    report.write_csv(out / "curve.csv")
    for name, ok in report.verdicts.items():
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    print("verification", "passed" if report.passed else "FAILED")
    return EXIT_OK if report.passed else EXIT_VERIFY


def reproduce_example(convention=ct.PROOF):
    """Constants of the one-dimensional stable example with a step profile."""
    a, R = EXAMPLE["alpha"], EXAMPLE["R"]
    mu = RadialLevyMeasure.alpha_stable(a, 1)
    dr = drift_mod.DriftSpec.step(EXAMPLE["M"], R, C_L=0.0)
    eps0 = ct.example_epsilon0(a, R)
    df = ct.distance_from_model(mu, dr, EXAMPLE["epsilon"], EXAMPLE["delta"],
                                convention=convention)
    c1_floor = ct.example_c1_lower(df.C_eps, eps0, R)
    floor_c = c1_floor / 2.0
    return {
        "alpha": a,
        "R": R,
        "epsilon0": eps0,
        "C_eps0": df.C_eps,
        "C_eps0_closed": math.sqrt(2.0),
        "c1_floor": c1_floor,
        "c_floor": floor_c,
        "c_floor_holds": bool(df.c >= floor_c),
        "pipeline": df.to_dict(),
    }


def cmd_reproduce_example(args):
    out = Path(args.out or "runs/example")
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "manifest.json", {"command": args.command, "argv": sys.argv[1:],
                                       "example": EXAMPLE})
    rep = reproduce_example(args.k_convention or ct.PROOF)
    write_json(out / "example.json", rep)
    print(json.dumps(rep, indent=2, default=_json_default))
    return EXIT_OK if rep["c_floor_holds"] else EXIT_VERIFY


def cmd_kappa_oracle(args):
    cfg, out = _prepare(args)
    dr = cfg.drift()
    if dr.b is None or dr.dimension != 1:
        raise LevyCoupleError("kappa-oracle needs a one-dimensional drift field")
    k = cfg.section("kappa_oracle")
    r = np.linspace(float(k["r_min"]), float(k["r_max"]), int(k["n"]))
    oracle = drift_mod.kappa_oracle_1d(dr.b, r, tuple(k["search"]), int(k["grid_n"]))
    analytic = np.asarray(dr.kappa(r), dtype=float) * np.ones_like(r)
    diff = float(np.max(np.abs(oracle - analytic)))
    with open(out / "kappa.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", "kappa_analytic", "kappa_oracle"])
        for row in zip(r, analytic, oracle):
            w.writerow([repr(float(x)) for x in row])
    res = {"n": int(r.size), "max_abs_diff": diff}
    write_json(out / "kappa_oracle.json", res)
    print(json.dumps(res))
    return EXIT_OK


COMMANDS = {
    "constants": cmd_constants,
    "build-distance": cmd_build_distance,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
    "reproduce-example": cmd_reproduce_example,
    "kappa-oracle": cmd_kappa_oracle,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML configuration file")
    common.add_argument("--out", help="output directory (overrides [output].dir)")
    common.add_argument("--seed", type=int, help="base seed (unsigned 64-bit)")
    common.add_argument("--threads", type=int, help="worker threads for simulation")
    common.add_argument("--k-convention", choices=(ct.PROOF, ct.STATEMENT),
                        help="denominator convention for K")
    p = argparse.ArgumentParser(prog="levycouple", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return p


def main(argv=None):
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except FeasibilityError as exc:
        tag = f" (Assumption {exc.assumption})" if exc.assumption else ""
        print(f"feasibility error{tag}: {exc}", file=sys.stderr)
        return EXIT_FEASIBILITY
    except (LevyCoupleError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OTHER


if __name__ == "__main__":
    sys.exit(main())

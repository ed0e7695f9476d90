"""TOML run configuration: parsing, validation and object construction.

Sections: ``[measure]``, ``[drift]``, ``[distance]``, ``[simulation]``,
``[output]``, ``[verify]`` and ``[kappa_oracle]``.  Everything is validated
up front; unknown keys are rejected so typos do not silently fall back to
defaults.
"""

from __future__ import annotations

import copy
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .contraction import PROOF, STATEMENT
from .drift import DOUBLE_WELL, LINEAR, STEP, ZERO, DriftSpec
from .errors import ConfigurationError
from .levy_measure import ALPHA_STABLE, SHELL_UNIFORM, TABULATED, RadialLevyMeasure

DEFAULTS = {
    "measure": {"kind": ALPHA_STABLE, "alpha": 1.5, "dimension": 1},
    "drift": {"kind": LINEAR, "M": 1.0},
    "distance": {
        "epsilon": 0.5,
        "variance_fraction": 0.25,
        "k_convention": PROOF,
        "n_sub": 1000,
    },
    "simulation": {
        "h": 1e-3,
        "horizon": 20.0,
        "n_paths": 1000,
        "base_seed": 0,
        "x0": 2.0,
        "y0": -2.0,
        "sample_times": [0.0, 0.5, 1.0, 2.0, 4.0],
        "stop_after_coupling": True,
        "blowup": 1e9,
        "threads": 1,
        "trace_paths": 0,
    },
    "output": {"dir": "runs/latest"},
    "verify": {"tol": 0.2, "ef_tol": 0.1, "rate_fraction": 0.9, "c_scale": 1.0},
    "kappa_oracle": {"r_min": 0.05, "r_max": 5.0, "n": 100, "search": [-10.0, 10.0],
                     "grid_n": 200001},
}

ALLOWED = {
    "measure": {"kind", "alpha", "dimension", "theta", "beta", "radii", "values", "table"},
    "drift": {"kind", "M", "R", "C_L"},
    "distance": {"epsilon", "delta", "m", "variance_fraction", "k_convention", "n_sub"},
    "simulation": set(DEFAULTS["simulation"]),
    "output": {"dir"},
    "verify": set(DEFAULTS["verify"]),
    "kappa_oracle": set(DEFAULTS["kappa_oracle"]),
}


def _merge(base, over):
    out = copy.deepcopy(base)
    for sec, vals in over.items():
        if sec not in ALLOWED:
            raise ConfigurationError(f"unknown section [{sec}]")
        if not isinstance(vals, dict):
            raise ConfigurationError(f"[{sec}] must be a table")
        bad = set(vals) - ALLOWED[sec]
        if bad:
            raise ConfigurationError(f"unknown keys in [{sec}]: {sorted(bad)}")
        if sec in ("measure", "drift") and "kind" in vals and vals["kind"] != out[sec].get("kind"):
            out[sec] = {}
        out.setdefault(sec, {}).update(vals)
    return out


@dataclass
class RunConfig:
    """Resolved configuration; ``raw`` is echoed verbatim into every manifest."""

    raw: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS))
    source: str | None = None

    @classmethod
    def load(cls, path=None, overrides=None):
        data = {}
        if path is not None:
            p = Path(path)
            try:
                with open(p, "rb") as fh:
                    data = tomllib.load(fh)
            except (OSError, tomllib.TOMLDecodeError) as exc:
                raise ConfigurationError(f"cannot read config {p}: {exc}") from exc
        raw = _merge(DEFAULTS, data)
        if overrides:
            raw = _merge(raw, overrides)
        cfg = cls(raw=raw, source=str(path) if path else None)
        cfg.validate()
        return cfg

    def section(self, name):
        return self.raw.get(name, {})

    # --- construction -------------------------------------------------
    def measure(self):
        s = self.section("measure")
        kind = s.get("kind")
        if kind == ALPHA_STABLE:
            return RadialLevyMeasure.alpha_stable(float(s.get("alpha", 1.5)), int(s.get("dimension", 1)))
        if kind == SHELL_UNIFORM:
            return RadialLevyMeasure.shell_uniform(float(s["theta"]), float(s["beta"]))
        if kind == TABULATED:
            if "table" in s:
                arr = np.loadtxt(self._resolve(s["table"]), delimiter=",", ndmin=2)
                radii, values = arr[:, 0], arr[:, 1]
            else:
                radii, values = s["radii"], s["values"]
            return RadialLevyMeasure.tabulated(radii, values, int(s.get("dimension", 1)))
        raise ConfigurationError(f"unknown measure kind {kind!r}")

    def drift(self):
        s = self.section("drift")
        kind = s.get("kind")
        d = int(self.section("measure").get("dimension", 1))
        C_L = s.get("C_L")
        if kind == LINEAR:
            return DriftSpec.linear(s.get("M", 1.0), d, C_L)
        if kind == DOUBLE_WELL:
            return DriftSpec.double_well(C_L)
        if kind == STEP:
            return DriftSpec.step(s["M"], s["R"], 0.0 if C_L is None else C_L, d)
        if kind == ZERO:
            return DriftSpec.zero(d)
        raise ConfigurationError(f"unknown drift kind {kind!r}")

    def _resolve(self, p):
        p = Path(p)
        if not p.is_absolute() and self.source:
            p = Path(self.source).parent / p
        return p

    @property
    def epsilon(self):
        return float(self.section("distance")["epsilon"])

    @property
    def delta(self):
        return float(self.section("distance").get("delta", self.epsilon))

    @property
    def convention(self):
        return self.section("distance")["k_convention"]

    @property
    def out_dir(self):
        return Path(self.section("output")["dir"])

    # --- validation ---------------------------------------------------
    def validate(self):
        m = self.section("measure")
        if m.get("kind") not in (ALPHA_STABLE, SHELL_UNIFORM, TABULATED):
            raise ConfigurationError(f"unknown measure kind {m.get('kind')!r}")
        if m["kind"] == SHELL_UNIFORM and not {"theta", "beta"} <= set(m):
            raise ConfigurationError("shell-uniform measure needs theta and beta")
        if m["kind"] == TABULATED and not ("table" in m or {"radii", "values"} <= set(m)):
            raise ConfigurationError("tabulated measure needs radii/values or a table file")
        dr = self.section("drift")
        if dr.get("kind") not in (LINEAR, DOUBLE_WELL, STEP, ZERO):
            raise ConfigurationError(f"unknown drift kind {dr.get('kind')!r}")
        if dr["kind"] == STEP and not {"M", "R"} <= set(dr):
            raise ConfigurationError("step drift needs M and R")
        dist = self.section("distance")
        if not self.epsilon > 0 or not self.delta > 0:
            raise ConfigurationError("epsilon and delta must be positive")
        if self.convention not in (PROOF, STATEMENT):
            raise ConfigurationError("k_convention must be 'proof' or 'statement'")
        if not 0 < float(dist["variance_fraction"]):
            raise ConfigurationError("variance_fraction must be positive")
        sim = self.section("simulation")
        if not float(sim["h"]) > 0:
            raise ConfigurationError("simulation.h must be positive")
        if int(sim["n_paths"]) < 0 or int(sim["threads"]) < 1:
            raise ConfigurationError("n_paths must be >= 0 and threads >= 1")
        if not 0 <= int(sim["base_seed"]) < 2**64:
            raise ConfigurationError("base_seed must be an unsigned 64-bit integer")
        if float(self.section("verify")["c_scale"]) <= 0:
            raise ConfigurationError("verify.c_scale must be positive")

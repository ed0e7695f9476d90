import csv
import json
import math

import pytest

from levycouple.cli import EXIT_FEASIBILITY, EXIT_OK, EXIT_OTHER, EXIT_VERIFY, main
from levycouple.config import RunConfig
from levycouple.errors import ConfigurationError

SQRT2 = math.sqrt(2.0)

STEP = """
[measure]
kind = "alpha-stable"
alpha = 1.5
[drift]
kind = "step-dissipative"
M = 2.8284271247461903
R = 1.0
C_L = 0.0
[distance]
epsilon = 0.5
delta = 0.5
"""

OU = """
[simulation]
n_paths = 400
base_seed = 9
"""


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def _run(args):
    return main(args)


def test_constants_worked_example(tmp_path, capsys):
    cfg = _write(tmp_path, "step.toml", STEP)
    out = tmp_path / "c"
    assert _run(["constants", "--config", cfg, "--out", str(out)]) == EXIT_OK
    c = json.loads((out / "constants.json").read_text())
    assert c["c1"] == pytest.approx(SQRT2 / 2, abs=1e-6)
    assert c["c"] == pytest.approx(SQRT2 / 4, abs=1e-6)
    assert c["a"] == pytest.approx(0.4583333, abs=1e-6)
    assert c["K"] == 1.0
    m = json.loads((out / "manifest.json").read_text())
    assert m["command"] == "constants" and m["config"]["drift"]["kind"] == "step-dissipative"


def test_constants_infeasible_shell(tmp_path, capsys):
    cfg = _write(tmp_path, "s.toml", """
[measure]
kind = "shell-uniform"
theta = 1.0
beta = 2.5
[distance]
epsilon = 0.6
delta = 0.6
""")
    assert _run(["constants", "--config", cfg, "--out", str(tmp_path / "s")]) == EXIT_FEASIBILITY
    assert "Assumption 4" in capsys.readouterr().err


def test_build_distance_rows(tmp_path):
    cfg = _write(tmp_path, "step.toml", STEP)
    out = tmp_path / "d"
    assert _run(["build-distance", "--config", cfg, "--out", str(out)]) == EXIT_OK
    with open(out / "distance.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["r", "phi", "Phi", "g", "f1", "f"]
    first = {k: float(v) for k, v in rows[0].items()}
    assert first == {"r": 0.0, "phi": 1.0, "Phi": 0.0, "g": 1.0, "f1": 0.0, "f": 0.0}
    for row in rows[1:]:
        r, f1 = float(row["r"]), float(row["f1"])
        if abs(r - 0.5) < 1e-9:
            assert f1 == pytest.approx(0.4583333, abs=1e-6)
            assert float(row["f"]) == pytest.approx(0.9166667, abs=1e-6)
        if r > 2.0:
            assert float(row["g"]) == 0.5
            break


def test_simulate_deterministic(tmp_path):
    cfg = _write(tmp_path, "ou.toml", OU)
    a, b = tmp_path / "a", tmp_path / "b"
    assert _run(["simulate", "--config", cfg, "--out", str(a)]) == EXIT_OK
    assert _run(["simulate", "--config", cfg, "--out", str(b), "--threads", "4"]) == EXIT_OK
    assert (a / "summary.json").read_bytes() == (b / "summary.json").read_bytes()
    c = tmp_path / "c"
    assert _run(["simulate", "--config", cfg, "--out", str(c), "--seed", "10"]) == EXIT_OK
    assert (a / "summary.json").read_bytes() != (c / "summary.json").read_bytes()


def test_simulate_empty_and_traces(tmp_path):
    cfg = _write(tmp_path, "e.toml", "[simulation]\nn_paths = 0\n")
    out = tmp_path / "e"
    assert _run(["simulate", "--config", cfg, "--out", str(out)]) == EXIT_OK
    assert json.loads((out / "summary.json").read_text())["n_paths"] == 0
    cfg = _write(tmp_path, "t.toml", "[simulation]\nn_paths = 3\ntrace_paths = 2\n")
    out = tmp_path / "t"
    assert _run(["simulate", "--config", cfg, "--out", str(out)]) == EXIT_OK
    assert (out / "trace_00001.csv").exists() and not (out / "trace_00002.csv").exists()


def test_simulate_profile_only_drift_fails(tmp_path):
    cfg = _write(tmp_path, "step.toml", STEP)
    assert _run(["simulate", "--config", cfg, "--out", str(tmp_path / "x")]) == EXIT_OTHER


def test_verify_pass_and_wrong_rate(tmp_path):
    cfg = _write(tmp_path, "ou.toml", OU)
    assert _run(["verify", "--config", cfg, "--out", str(tmp_path / "v")]) == EXIT_OK
    rep = json.loads((tmp_path / "v" / "report.json").read_text())
    assert rep["passed"] and rep["constants"]["R1"] == pytest.approx(2**0.75, abs=1e-5)
    bad = _write(tmp_path, "bad.toml", OU + "[verify]\nc_scale = 10.0\n")
    assert _run(["verify", "--config", bad, "--out", str(tmp_path / "w")]) == EXIT_VERIFY


def test_verify_degenerate_start(tmp_path):
    cfg = _write(tmp_path, "d.toml", "[simulation]\nn_paths = 30\nx0 = 1.0\ny0 = 1.0\n")
    assert _run(["verify", "--config", cfg, "--out", str(tmp_path / "d")]) == EXIT_OK


def test_reproduce_example(tmp_path):
    out = tmp_path / "ex"
    assert _run(["reproduce-example", "--out", str(out)]) == EXIT_OK
    rep = json.loads((out / "example.json").read_text())
    assert rep["epsilon0"] == 0.5
    assert rep["C_eps0"] == pytest.approx(SQRT2, rel=1e-15)
    assert rep["c_floor"] == pytest.approx(SQRT2 / 8)
    assert rep["pipeline"]["c"] == pytest.approx(SQRT2 / 4, abs=1e-6)
    assert rep["c_floor_holds"]


def test_kappa_oracle(tmp_path):
    cfg = _write(tmp_path, "dw.toml", '[drift]\nkind = "double-well"\n')
    out = tmp_path / "k"
    assert _run(["kappa-oracle", "--config", cfg, "--out", str(out)]) == EXIT_OK
    assert json.loads((out / "kappa_oracle.json").read_text())["max_abs_diff"] < 1e-6


def test_k_convention_flag(tmp_path):
    cfg = _write(tmp_path, "dw.toml", '[drift]\nkind = "double-well"\nC_L = 1.0\n')
    Ks = {}
    for conv in ("proof", "statement"):
        out = tmp_path / conv
        assert _run(["constants", "--config", cfg, "--out", str(out), "--k-convention", conv]) == 0
        Ks[conv] = json.loads((out / "constants.json").read_text())["K"]
    assert Ks["statement"] < Ks["proof"]


def test_config_errors(tmp_path):
    bad = _write(tmp_path, "bad.toml", "[simulation]\nn_pathz = 3\n")
    assert _run(["constants", "--config", bad, "--out", str(tmp_path / "b")]) == EXIT_OTHER
    with pytest.raises(ConfigurationError):
        RunConfig.load(overrides={"distance": {"k_convention": "other"}})
    with pytest.raises(ConfigurationError):
        RunConfig.load(overrides={"measure": {"kind": "shell-uniform"}})
    assert _run(["constants", "--config", str(tmp_path / "missing.toml"),
                 "--out", str(tmp_path / "m")]) == EXIT_OTHER


def test_log_env(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("LEVYCOUPLE_LOG", "DEBUG")
    cfg = _write(tmp_path, "step.toml", STEP)
    assert _run(["constants", "--config", cfg, "--out", str(tmp_path / "l")]) == EXIT_OK

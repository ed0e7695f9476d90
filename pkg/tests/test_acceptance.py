"""Acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line (printed immediately and repeated in
the terminal summary) before asserting.  The Monte Carlo criteria 3-6 share
one 10^4-path coupled ensemble and one 10^4-path single-marginal ensemble.
Run alone with ``pytest tests/test_acceptance.py -v``.
"""

import json
import math
import time

import numpy as np
import pytest
from scipy import stats

from levycouple import metrics
from levycouple.contraction import (
    distance_from_model,
    example_epsilon0,
    verify_functional_inequality,
)
from levycouple.coupling_sim import SimConfig, run_ensemble
from levycouple.drift import DriftSpec, kappa_oracle_1d
from levycouple.errors import FeasibilityError
from levycouple.levy_measure import (
    RadialLevyMeasure,
    TruncationParams,
    c_delta_overlap,
    c_epsilon,
)

SQRT2 = math.sqrt(2.0)
N_PATHS = 10_000
GRID = (0.5, 1.0, 2.0, 4.0)
ELAPSED = {}


@pytest.fixture
def record(acceptance_log, capsys):
    def _record(number, name, checks):
        ok = all(v for _, v in checks)
        failed = [k for k, v in checks if not v]
        detail = "all checks hold" if ok else "failed: " + "; ".join(failed)
        acceptance_log.append((number, name, ok, detail))
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {name} -- {detail}")
        return ok

    return _record


@pytest.fixture(scope="module")
def stable():
    return RadialLevyMeasure.alpha_stable(1.5, 1)


@pytest.fixture(scope="module")
def ou_df(stable):
    return distance_from_model(stable, DriftSpec.linear(1.0), 0.5, 0.5)


@pytest.fixture(scope="module")
def ou_cfg(stable, ou_df):
    return SimConfig(
        measure=stable, trunc=TruncationParams(ou_df.m, ou_df.eta), drift=DriftSpec.linear(1.0),
        h=1e-3, horizon=20.0, n_paths=N_PATHS, base_seed=20240601, x0=2.0, y0=-2.0,
        sample_times=(0.0,) + GRID,
    )


@pytest.fixture(scope="module")
def coupled(ou_cfg):
    t0 = time.perf_counter()
    ens = run_ensemble(ou_cfg)
    ELAPSED["coupled"] = time.perf_counter() - t0
    return ens


@pytest.fixture(scope="module")
def single_from_y(ou_cfg):
    t0 = time.perf_counter()
    ens = run_ensemble(ou_cfg, single=True, start="y")
    ELAPSED["single"] = time.perf_counter() - t0
    return ens


def test_criterion_1_worked_example_constants(stable, record):
    t0 = time.perf_counter()
    step = DriftSpec.step(2 * SQRT2, 1.0, C_L=0.0)
    df = distance_from_model(stable, step, 0.5, 0.5)
    C_closed = c_epsilon(stable, 0.5, method="closed")
    C_quad = c_epsilon(stable, 0.5, method="quadrature")
    elapsed = time.perf_counter() - t0
    checks = [
        ("C_eps closed = sqrt2", abs(C_closed - SQRT2) <= 1e-15 * SQRT2),
        ("C_eps quadrature within 1e-4", abs(C_quad / SQRT2 - 1) < 1e-4),
        ("C_delta = 32/3 within 1e-3", abs(df.C_delta / (32 / 3) - 1) < 1e-3),
        ("eps0 = 0.5", example_epsilon0(1.5, 1.0) == 0.5),
        ("R0 = 0", df.R0 == 0.0),
        ("R1 = 1 +- 1e-3", abs(df.R1 - 1.0) < 1e-3),
        ("c1 = sqrt2/2 +- 1e-3", abs(df.c1 - SQRT2 / 2) < 1e-3),
        ("K = 1", df.K == 1.0),
        ("c = sqrt2/4 +- 1e-3", abs(df.c - SQRT2 / 4) < 1e-3),
        ("c >= sqrt2/8", df.c >= SQRT2 / 8),
        (f"runtime {elapsed:.3f}s < 1s", elapsed < 1.0),
    ]
    assert record(1, "worked-example constants", checks)


def test_criterion_2_functional_inequality(stable, record):
    t0 = time.perf_counter()
    step = DriftSpec.step(2 * SQRT2, 1.0, C_L=0.0)
    dw = DriftSpec.double_well(C_L=1.0)
    worst = {}
    for name, drift in (("step", step), ("double-well", dw)):
        df = distance_from_model(stable, drift, 0.5, 0.5)
        rep = verify_functional_inequality(df, drift.kappa, r_max=10 * df.R1, n_points=2000)
        assert rep.r.size == 2000 and rep.r.min() > df.delta
        worst[name] = rep.max_violation
    elapsed = time.perf_counter() - t0
    checks = [(f"{k} max {v:.3g} <= 1e-8", v <= 1e-8) for k, v in worst.items()]
    checks.append((f"runtime {elapsed:.2f}s < 5s", elapsed < 5.0))
    assert record(2, "functional inequality on (delta, 10 R1]", checks)


def test_criterion_3_marginal_law(coupled, single_from_y, record):
    k = coupled.times.tolist().index(1.0)
    ks = stats.ks_2samp(coupled.Y[coupled.ok, k, 0], single_from_y.X[single_from_y.ok, k, 0])
    checks = [
        (f"n = {coupled.n_paths} per side", coupled.n_paths == single_from_y.n_paths == N_PATHS),
        (f"KS statistic {ks.statistic:.4f} < 0.025", ks.statistic < 0.025),
    ]
    elapsed = ELAPSED["coupled"] + ELAPSED["single"]
    checks.append((f"runtime {elapsed:.1f}s < 120s", elapsed < 120.0))
    assert record(3, "marginal law of the coupled second coordinate", checks)


def test_criterion_4_exponential_contraction(coupled, ou_df, record):
    curve = metrics.ef_decay_curve(coupled, ou_df, times=(0.0,) + GRID)
    f4 = ou_df(4.0)
    checks = []
    for t, v in zip(curve.times[1:], curve.value[1:]):
        bound = 1.1 * math.exp(-ou_df.c * t) * f4
        checks.append((f"t={t:g}: {v:.4f} <= {bound:.4f}", v <= bound))
    rate, _, _ = metrics.fit_rate(curve)
    checks.append((f"fitted rate {rate:.3f} >= 0.9 c = {0.9 * ou_df.c:.3f}", rate >= 0.9 * ou_df.c))
    checks.append((f"runtime {ELAPSED['coupled']:.1f}s < 300s", ELAPSED["coupled"] < 300.0))
    assert record(4, "exponential contraction of E f(|Z_t|)", checks)


def test_criterion_5_coupling_success(coupled, record):
    p = float(np.mean(coupled.T[coupled.ok] <= 20.0))
    checks = [(f"P(T <= 20) = {p:.4f} >= 0.99", p >= 0.99),
              ("no flagged paths beyond budget", not coupled.run_flagged)]
    assert record(5, "successful coupling", checks)


def test_criterion_6_corollary_envelopes(coupled, ou_df, record):
    rep = metrics.contraction_report(coupled, ou_df, times=(0.0, 1.0, 2.0, 4.0), tol=0.2)
    checks = [(k, v) for k, v in rep.verdicts.items()
              if k.split("@")[0] in ("tv", "w1") and k.split("@")[1] in ("1", "2", "4")]
    assert len(checks) == 6
    assert record(6, "TV-surrogate and W1 envelopes at t in {1,2,4}", checks)


def test_criterion_7_feasibility(record):
    shell25 = RadialLevyMeasure.shell_uniform(1.0, 2.5)
    try:
        distance_from_model(shell25, DriftSpec.linear(1.0), 0.7, 0.7)
        infeasible = False
    except FeasibilityError:
        infeasible = True
    shell4 = RadialLevyMeasure.shell_uniform(1.0, 4.0)
    df = distance_from_model(shell4, DriftSpec.linear(1.0), 1.5, 1.5)
    checks = [
        ("beta=2.5 raises a feasibility error", infeasible),
        (f"beta=4: C_delta = {df.C_delta:.4g} > 0", df.C_delta > 0),
        (f"beta=4: C_eps = {df.C_eps:.4g} > 0", df.C_eps > 0),
        (f"beta=4: c = {df.c:.4g} > 0", df.c > 0),
    ]
    assert record(7, "assumption feasibility for shell-uniform noise", checks)


def test_criterion_8_oracles(stable, record):
    r = np.linspace(0.05, 5.0, 100)
    lin, dw = DriftSpec.linear(1.3), DriftSpec.double_well()
    d_lin = np.max(np.abs(kappa_oracle_1d(lin.b, r) - lin.kappa(r)))
    d_dw = np.max(np.abs(kappa_oracle_1d(dw.b, r) - dw.kappa(r)))
    rng = np.random.default_rng(8)
    w_diff = 0.0
    for n in (1, 2, 17, 100, 200):
        a, b = rng.standard_cauchy(n), rng.normal(2.0, 1.0, n)
        sorted_w = metrics.empirical_w1_1d(a, b)
        assign_w = metrics.empirical_w1_assignment(a, b)
        w_diff = max(w_diff, abs(sorted_w - assign_w) / max(sorted_w, 1e-300))
    ce = abs(c_epsilon(stable, 0.5, method="quadrature") / c_epsilon(stable, 0.5) - 1)
    cd = abs(c_delta_overlap(stable, 0.5, method="quadrature") / c_delta_overlap(stable, 0.5) - 1)
    checks = [
        (f"linear kappa oracle {d_lin:.2g} <= 1e-6", d_lin <= 1e-6),
        (f"double-well kappa oracle {d_dw:.2g} <= 1e-6", d_dw <= 1e-6),
        # identical optimal plans; only the summation order of the costs differs
        (f"sorted vs assignment W1 rel diff {w_diff:.2g} <= 1e-12", w_diff <= 1e-12),
        (f"C_eps quadrature rel {ce:.2g} <= 1e-6", ce <= 1e-6),
        (f"C_delta quadrature rel {cd:.2g} <= 1e-6", cd <= 1e-6),
    ]
    assert record(8, "oracle equivalences", checks)


def test_criterion_9_determinism(ou_cfg, record):
    from dataclasses import replace

    cfg = replace(ou_cfg, n_paths=1000)
    blobs = {}
    for threads in (1, 4, 16):
        blobs[threads] = json.dumps(run_ensemble(cfg, threads=threads).summary(), sort_keys=True)
    checks = [(f"{t} threads identical to 1 thread", blobs[t] == blobs[1]) for t in (4, 16)]
    assert record(9, "thread-count determinism", checks)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))

"""Estimators and verdicts computed from ensemble output.

TV is never estimated directly: the uncoupled mass ``2 P(X_t != Y_t)`` is
the coupling-inequality surrogate.  ``E f(|Z_t|)`` from one coupling is an
upper-bound witness for ``W_f``, not an estimate of it.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from .errors import DomainError

log = logging.getLogger(__name__)

DEFAULT_TOL = 0.2
MAX_RELATIVE_STDERR = 0.25
ASSIGNMENT_MAX_N = 2000


@dataclass(frozen=True)
class DecayCurve:
    times: np.ndarray
    value: np.ndarray
    stderr: np.ndarray
    n: int


def ef_decay_curve(ensemble, df, times=None):
    """Monte Carlo mean of ``f(|Z_t|)`` with standard errors at the given times."""
    Z = ensemble.Z()
    if Z.shape[0] == 0:
        raise DomainError("empty ensemble")
    all_t = np.asarray(ensemble.times, dtype=float)
    if times is None:
        idx = np.arange(all_t.size)
    else:
        idx = np.array([int(np.flatnonzero(np.isclose(all_t, t))[0]) if np.isclose(all_t, t).any()
                        else -1 for t in np.atleast_1d(times)])
        if np.any(idx < 0):
            raise DomainError("requested time not among the ensemble sample times")
    fz = np.asarray(df(Z[:, idx]), dtype=float)
    n = fz.shape[0]
    # shifted mean: exact when every path shares the same value (e.g. fixed starts at t = 0)
    mean = fz[0] + (fz - fz[0]).mean(axis=0)
    dev = fz - fz[0]
    se = dev.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.zeros(idx.size)
    return DecayCurve(times=all_t[idx], value=mean, stderr=se, n=n)


def fit_rate(curve, max_relative_stderr=MAX_RELATIVE_STDERR):
    """Least-squares slope of ``log value`` against ``t``.

    Accepts a :class:`DecayCurve` or a ``(times, values[, stderr])`` tuple.
    Points with non-positive values or relative standard error at or above
    ``max_relative_stderr`` are excluded.  Returns ``(rate, intercept,
    residual)`` where ``value ~ exp(intercept - rate t)`` and ``residual``
    is the RMS of the log-residuals.
    """
    if isinstance(curve, DecayCurve):
        t, v, se = curve.times, curve.value, curve.stderr
    else:
        t, v = np.asarray(curve[0], float), np.asarray(curve[1], float)
        se = np.asarray(curve[2], float) if len(curve) > 2 else np.zeros_like(v)
    t, v, se = (np.asarray(a, dtype=float) for a in (t, v, se))
    with np.errstate(divide="ignore", invalid="ignore"):
        use = (v > 0) & (se / v < max_relative_stderr)
    if use.sum() < 3:
        raise DomainError(f"fit_rate needs at least 3 usable points, got {int(use.sum())}")
    slope, intercept = np.polyfit(t[use], np.log(v[use]), 1)
    resid = np.log(v[use]) - (intercept + slope * t[use])
    return float(-slope), float(intercept), float(np.sqrt(np.mean(resid**2)))


def _as_2d(a):
    a = np.asarray(a, dtype=float)
    return a[:, None] if a.ndim == 1 else a


def empirical_w1_1d(sample_a, sample_b):
    """W1 between two equal-size samples on the line via order statistics."""
    a = np.ravel(np.asarray(sample_a, dtype=float))
    b = np.ravel(np.asarray(sample_b, dtype=float))
    if a.size != b.size:
        raise DomainError("samples must have equal size")
    if a.size == 0:
        raise DomainError("empty sample")
    return float(np.mean(np.abs(np.sort(a) - np.sort(b))))


def empirical_w1_assignment(sample_a, sample_b):
    """W1 between two equal-size point clouds by exact minimum-cost matching."""
    a, b = _as_2d(sample_a), _as_2d(sample_b)
    if a.shape != b.shape:
        raise DomainError("samples must have the same shape")
    if a.shape[0] > ASSIGNMENT_MAX_N:
        raise DomainError(f"assignment W1 limited to n <= {ASSIGNMENT_MAX_N}")
    cost = cdist(a, b)
    i, j = linear_sum_assignment(cost)
    return float(cost[i, j].sum() / a.shape[0])


def empirical_w1(sample_a, sample_b):
    a, b = _as_2d(sample_a), _as_2d(sample_b)
    if a.shape[1] == 1:
        return empirical_w1_1d(a[:, 0], b[:, 0])
    return empirical_w1_assignment(a, b)


@dataclass
class ContractionReport:
    """Curves on a shared time grid plus verdicts derived from them."""

    times: list
    ef: list
    ef_stderr: list
    uncoupled_fraction: list
    w1: list
    w_f: float
    envelope_ef: list
    envelope_tv: list
    envelope_w1: list
    rate: float | None
    intercept: float | None
    c: float
    tol: float
    n_paths: int
    verdicts: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def passed(self):
        return all(self.verdicts.values())

    def to_dict(self):
        out = {k: v for k, v in self.__dict__.items()}
        out["passed"] = self.passed
        return out

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time", "value", "stderr", "envelope", "uncoupled_fraction",
                        "tv_envelope", "w1", "w1_envelope"])
            for row in zip(self.times, self.ef, self.ef_stderr, self.envelope_ef,
                           self.uncoupled_fraction, self.envelope_tv, self.w1, self.envelope_w1):
                w.writerow([repr(float(v)) for v in row])


def check_corollaries(times, uncoupled, w1, w_f, df, tol=DEFAULT_TOL, c=None):
    """Verdicts for the TV surrogate and W1 against their exponential envelopes.

    ``w_f`` is ``f(|x0 - y0|)`` for fixed initial points.  Returns
    ``(verdicts, tv_envelope, w1_envelope)`` keyed by ``"tv@t"``/``"w1@t"``.
    """
    c = df.c if c is None else c
    times = np.asarray(times, dtype=float)
    decay = np.exp(-c * times) * w_f
    env_tv = df.prefactor_tv * decay
    env_w1 = df.prefactor_w1 * decay
    verdicts = {}
    for t, u, w, et, ew in zip(times, uncoupled, w1, env_tv, env_w1):
        verdicts[f"tv@{t:g}"] = bool(2.0 * u <= et * (1.0 + tol))
        verdicts[f"w1@{t:g}"] = bool(w <= ew * (1.0 + tol))
    return verdicts, env_tv, env_w1


def contraction_report(ensemble, df, times=None, *, tol=DEFAULT_TOL, ef_tol=0.1,
                       rate_fraction=0.9, c=None):
    """Full verification from a coupled ensemble with fixed initial points.

    Checks ``E f(|Z_t|) <= (1 + ef_tol) e^{-ct} f(|x0 - y0|)`` at the
    positive grid times, a fitted rate of at least ``rate_fraction c``, and
    the two corollary envelopes with tolerance ``tol``.  ``c`` overrides the
    rate taken from ``df`` (used to demonstrate failing verdicts).
    """
    c = df.c if c is None else float(c)
    curve = ef_decay_curve(ensemble, df, times)
    ok = ensemble.ok
    all_t = np.asarray(ensemble.times)
    idx = [int(np.flatnonzero(np.isclose(all_t, t))[0]) for t in curve.times]
    X, Y = ensemble.X[ok][:, idx], ensemble.Y[ok][:, idx]
    Z = np.linalg.norm(X - Y, axis=-1)
    uncoupled = np.mean(Z > 0, axis=0)
    # exact matching in d > 1 is cubic; use the first paths only
    n_w1 = X.shape[0] if X.shape[-1] == 1 else min(X.shape[0], ASSIGNMENT_MAX_N)
    w1 = np.array([empirical_w1(X[:n_w1, k], Y[:n_w1, k]) for k in range(len(idx))])
    z0 = Z[:, 0] if curve.times[0] == 0 else None
    if z0 is not None and not np.allclose(z0, z0[0]):
        raise DomainError("corollary checks need fixed initial points")
    w_f = float(curve.value[0]) if z0 is not None else float(
        df(np.linalg.norm(ensemble.X[0, 0] - ensemble.Y[0, 0])))
    env_ef = np.exp(-c * curve.times) * w_f
    verdicts, env_tv, env_w1 = check_corollaries(curve.times, uncoupled, w1, w_f, df, tol, c)
    for t, v, e in zip(curve.times, curve.value, env_ef):
        if t > 0:
            verdicts[f"ef@{t:g}"] = bool(v <= (1.0 + ef_tol) * e)
    notes = []
    try:
        rate, intercept, _ = fit_rate(curve)
        verdicts["rate"] = bool(rate >= rate_fraction * c)
    except DomainError as exc:
        rate = intercept = None
        if np.all(curve.value[curve.times > 0] == 0):
            notes.append("every path coupled by the first positive time; rate not fitted")
        else:
            verdicts["rate"] = False
            notes.append(str(exc))
    if ensemble.run_flagged:
        verdicts["failure_budget"] = False
    return ContractionReport(
        times=curve.times.tolist(), ef=curve.value.tolist(), ef_stderr=curve.stderr.tolist(),
        uncoupled_fraction=uncoupled.tolist(), w1=w1.tolist(), w_f=w_f,
        envelope_ef=env_ef.tolist(), envelope_tv=env_tv.tolist(), envelope_w1=env_w1.tolist(),
        rate=rate, intercept=intercept, c=c, tol=tol, n_paths=int(ok.sum()),
        verdicts=verdicts, notes=notes,
    )


def sandwich_holds(ensemble, df):
    """``mean f(|Z|) >= max(phi(R0)/2 * W1_hat, a * P(X != Y))`` at every sample time."""
    Z = ensemble.Z()
    ef = np.asarray(df(Z)).mean(axis=0)
    ok = ensemble.ok
    n_w1 = Z.shape[0] if ensemble.X.shape[-1] == 1 else min(Z.shape[0], ASSIGNMENT_MAX_N)
    w1 = np.array([empirical_w1(ensemble.X[ok][:n_w1, k], ensemble.Y[ok][:n_w1, k])
                   for k in range(Z.shape[1])])
    lower = np.maximum(0.5 * df.phi_R0 * w1, df.a * np.mean(Z > 0, axis=0))
    return bool(np.all(ef >= lower - 1e-12))


@dataclass
class InvariantProbe:
    times: list
    w1: list
    noise_floor: float
    rate: float | None
    monotone: bool
    rate_ok: bool | None

    def to_dict(self):
        return dict(self.__dict__)


def invariant_measure_probe(cfg, df, burn_in=20.0, horizon=None, *, start=5.0,
                            times=(0.25, 0.5, 1.0, 2.0, 4.0), n_paths=2000, stride=1.0,
                            threads=1):
    """W1 between the law at ``t`` from ``start`` and a long-run occupation sample.

    The reference sample for the invariant law is one long single path,
    recorded every ``stride`` after ``burn_in`` up to ``horizon`` (default:
    ``2 n_paths`` records).  The noise floor is the W1 between two disjoint
    halves of the reference records, each of size ``n_paths``.
    """
    from dataclasses import replace

    from .coupling_sim import run_ensemble

    if cfg.dimension != 1:
        raise DomainError("invariant_measure_probe is implemented for d = 1")
    if horizon is None:
        horizon = burn_in + stride * 2 * n_paths
    n_ref = int(round((horizon - burn_in) / stride))
    if n_ref < 2:
        raise DomainError("reference window too short")
    ref_times = tuple(burn_in + stride * np.arange(1, n_ref + 1))
    ref_cfg = replace(cfg, n_paths=1, horizon=ref_times[-1], sample_times=ref_times,
                      x0=0.0, y0=0.0, base_seed=cfg.base_seed + 1)
    ref_ens = run_ensemble(ref_cfg, single=True)
    ref = ref_ens.X[0, :, 0]
    if ref_ens.flagged[0] or not np.all(np.isfinite(ref)):
        raise DomainError("non-finite moments detected in the reference path")
    perm = np.random.default_rng(cfg.base_seed).permutation(ref.size)
    half = ref.size // 2
    k = min(n_paths, half)
    ref_a, ref_b = ref[perm[:k]], ref[perm[half:half + k]]
    noise = empirical_w1_1d(ref_a, ref_b)
    times = tuple(float(t) for t in times)
    run_cfg = replace(cfg, n_paths=k, horizon=max(times), sample_times=times,
                      x0=float(start), y0=float(start))
    ens = run_ensemble(run_cfg, single=True, threads=threads)
    if ens.run_flagged:
        raise DomainError("non-finite moments detected in the probe ensemble")
    X = ens.X[:, :, 0]
    w1 = np.array([empirical_w1_1d(X[:, j], ref_a) for j in range(len(times))])
    above = w1 > 2.0 * noise
    monotone = bool(np.all(np.diff(w1[above]) <= 0)) if above.sum() > 1 else True
    rate = None
    rate_ok = None
    if above.sum() >= 2:
        slope, _ = np.polyfit(np.asarray(times)[above], np.log(w1[above]), 1)
        rate = float(-slope)
        rate_ok = bool(rate >= 0.5 * df.c)
    return InvariantProbe(times=list(times), w1=w1.tolist(), noise_floor=float(noise),
                          rate=rate, monotone=monotone, rate_ok=rate_ok)

"""Event-driven Monte Carlo simulation of the mirror/reflection coupling.

Each path owns a random stream derived from ``base_seed`` and the path
index, so ensemble results do not depend on the number of worker threads.
Between events (jumps, sample times) both coordinates follow explicit Euler
on the drift over the global grid ``k h``; event times are hit exactly.

Only jumps with ``|v| > eta`` are drawn, for both coordinates alike, and the
control probability ``rho`` is evaluated for the simulated density
``q 1{|v| > eta}`` so that the second coordinate has exactly the law of the
simulated first one.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernel as K
from .drift import DOUBLE_WELL, LINEAR, ZERO, DriftSpec
from .errors import ConfigurationError
from .levy_measure import (
    ALPHA_STABLE,
    SHELL_UNIFORM,
    RadialLevyMeasure,
    TruncationParams,
    sample_jumps,
)

log = logging.getLogger(__name__)

COUPLED_STREAM = 0
SINGLE_STREAM = 1
DECISIONS = ("coalesce", "reflect", "synchronous-large", "synchronous-coupled")
FAILURE_BUDGET = 1e-3


@dataclass(frozen=True, eq=False)
class SimConfig:
    measure: RadialLevyMeasure
    trunc: TruncationParams
    drift: DriftSpec
    h: float = 1e-3
    horizon: float = 20.0
    n_paths: int = 1000
    base_seed: int = 0
    x0: np.ndarray | float = 2.0
    y0: np.ndarray | float = -2.0
    sample_times: tuple = (0.0, 0.5, 1.0, 2.0, 4.0)
    stop_after_coupling: bool = True
    blowup: float = 1e9
    block: float = 2.0

    def __post_init__(self):
        if not self.h > 0:
            raise ConfigurationError("time step h must be positive")
        if self.horizon < 0 or self.n_paths < 0:
            raise ConfigurationError("horizon and n_paths must be nonnegative")
        if self.drift.b is None:
            raise ConfigurationError(f"drift kind {self.drift.kind!r} has no vector field")
        if self.drift.dimension != self.measure.dimension:
            raise ConfigurationError("drift and measure dimensions differ")
        st = np.asarray(self.sample_times, dtype=float)
        if st.size and (np.any(np.diff(st) <= 0) or st[0] < 0 or st[-1] > self.horizon):
            raise ConfigurationError("sample times must increase within [0, horizon]")
        object.__setattr__(self, "sample_times", tuple(float(t) for t in st))
        d = self.dimension
        for name in ("x0", "y0"):
            a = np.asarray(getattr(self, name), dtype=float)
            if a.ndim == 0:
                a = np.full(d, float(a))
            if a.shape not in ((d,), (self.n_paths, d)):
                raise ConfigurationError(f"{name} must have shape (d,) or (n_paths, d)")
            object.__setattr__(self, name, a)

    @property
    def dimension(self):
        return self.measure.dimension

    def start(self, i):
        x = self.x0 if self.x0.ndim == 1 else self.x0[i]
        y = self.y0 if self.y0.ndim == 1 else self.y0[i]
        return x.copy(), y.copy()


def path_rng(base_seed, stream, index):
    """Counter-based per-path generator: disjoint streams for every ``(stream, index)``."""
    ss = np.random.SeedSequence(int(base_seed), spawn_key=(int(stream), int(index)))
    return np.random.Generator(np.random.PCG64(ss))


def _encode(cfg):
    mu, dr = cfg.measure, cfg.drift
    d = cfg.dimension
    empty = np.zeros(2)
    if mu.kind == ALPHA_STABLE:
        mcode, mprm, tr, tq = K.MEAS_STABLE, np.array([d, mu.alpha], float), empty, empty
    elif mu.kind == SHELL_UNIFORM:
        mcode, mprm, tr, tq = K.MEAS_SHELL, np.array([d, mu.theta, mu.beta], float), empty, empty
    else:
        tr = np.linspace(mu.radii[0], mu.radii[-1], 20001)
        tq = np.asarray(mu.radial(tr), dtype=float)
        mcode, mprm = K.MEAS_TABLE, np.array([d], float)
    if dr.kind == LINEAR:
        dcode = K.DRIFT_LINEAR
        M = np.asarray(dr.params["M"], dtype=float)
        dprm = (M * np.eye(d) if M.ndim == 0 else M).ravel().astype(float)
    elif dr.kind == DOUBLE_WELL:
        dcode, dprm = K.DRIFT_DOUBLE_WELL, np.zeros(1)
    elif dr.kind == ZERO:
        dcode, dprm = K.DRIFT_ZERO, np.zeros(1)
    else:
        raise ConfigurationError(f"drift kind {dr.kind!r} cannot be simulated")
    return dcode, dprm, mcode, mprm, tr, tq


@dataclass
class CouplingPath:
    """One realisation of the coupled pair.

    ``X``/``Y`` hold positions at ``times``; the jump log lists every drawn
    jump with the decision taken for the second coordinate (an index into
    :data:`DECISIONS`) and the positions right after it.
    """

    times: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    T: float
    flagged: bool
    jump_times: np.ndarray = field(repr=False)
    jumps: np.ndarray = field(repr=False)
    decisions: np.ndarray = field(repr=False)
    X_after: np.ndarray = field(repr=False)
    Y_after: np.ndarray = field(repr=False)
    max_reflection_error: float = 0.0

    def trace_rows(self):
        """Rows ``(time, X, Y, |Z|, event)`` in time order."""
        rows = [(t, x, y, "sample") for t, x, y in zip(self.times, self.X, self.Y)]
        for t, x, y, dcode in zip(self.jump_times, self.X_after, self.Y_after, self.decisions):
            rows.append((t, x, y, DECISIONS[dcode]))
        rows.sort(key=lambda r: r[0])
        out = []
        for t, x, y, ev in rows:
            out.append((float(t), x.tolist(), y.tolist(), float(np.linalg.norm(x - y)), ev))
        return out


def _run_path(cfg, index, stream, record, enc, start="x"):
    dcode, dprm, mcode, mprm, tr, tq = enc
    d = cfg.dimension
    rng = path_rng(cfg.base_seed, stream, index)
    x, y = cfg.start(index)
    single = stream == SINGLE_STREAM
    if single:
        x = x if start == "x" else y
        y = x.copy()
    samples = np.asarray(cfg.sample_times, dtype=float)
    sx = np.full((samples.size, d), np.nan)
    sy = np.full((samples.size, d), np.nan)
    coupled = single or bool(np.all(x == y))
    st = np.array([0.0, float(coupled), 0.0 if coupled else np.inf, 0.0, 0.0, 0.0, 0.0])
    counts = np.zeros(4, dtype=np.int64)
    t_last = samples[-1] if samples.size else 0.0
    horizon = t_last if single else cfg.horizon
    stop = cfg.stop_after_coupling or single
    logs = []
    status = 0
    t0 = 0.0
    # first block covers every sample time
    t1 = max(t_last, min(cfg.block, horizon))
    while True:
        t1 = min(t1, horizon)
        times, jumps = sample_jumps(cfg.measure, cfg.trunc, t1 - t0, rng, t0=t0)
        us = rng.random(times.size)
        dec = np.full(times.size, -1, dtype=np.int8)
        n_rec = times.size if record else 0
        xj = np.full((n_rec, d), np.nan)
        yj = np.full((n_rec, d), np.nan)
        status = K.advance(
            x, y, st, t1, times, jumps, us, samples, sx, sy, cfg.h, dcode, dprm,
            mcode, mprm, tr, tq, cfg.trunc.m, cfg.trunc.eta, cfg.blowup, dec, counts,
            record, xj, yj, stop,
        )
        if record:
            done = dec >= 0
            logs.append((times[done], jumps[done], dec[done], xj[done], yj[done]))
        if status != 0 or t1 >= horizon:
            break
        t0, t1 = t1, t1 + cfg.block
    flagged = status == 2
    return sx, sy, float(st[2]), flagged, counts, logs, float(st[6])


def simulate_coupled_pair(cfg, path_index, record=True):
    """Simulate coupled path ``path_index`` of the ensemble described by ``cfg``."""
    if not 0 <= path_index < max(cfg.n_paths, 1):
        raise ConfigurationError("path_index out of range")
    sx, sy, T, flagged, _, logs, err = _run_path(
        cfg, path_index, COUPLED_STREAM, record, _encode(cfg)
    )
    d = cfg.dimension
    if logs:
        jt, jv, dec, xa, ya = (np.concatenate(p) for p in zip(*logs))
    else:
        jt, jv, dec = np.empty(0), np.empty((0, d)), np.empty(0, np.int8)
        xa, ya = np.empty((0, d)), np.empty((0, d))
    return CouplingPath(
        times=np.asarray(cfg.sample_times), X=sx, Y=sy, T=T, flagged=flagged,
        jump_times=jt, jumps=jv, decisions=dec, X_after=xa, Y_after=ya,
        max_reflection_error=err,
    )


@dataclass
class MarginalPath:
    times: np.ndarray
    X: np.ndarray
    flagged: bool


def simulate_single(cfg, path_index, start="x"):
    """One uncoupled solution, from a stream disjoint from the coupled runs.

    ``start`` picks the initial point: ``"x"`` uses ``x0``, ``"y"`` uses ``y0``.
    """
    _check_start(start)
    sx, _, _, flagged, _, _, _ = _run_path(
        cfg, path_index, SINGLE_STREAM, False, _encode(cfg), start
    )
    return MarginalPath(times=np.asarray(cfg.sample_times), X=sx, flagged=flagged)


@dataclass
class Ensemble:
    times: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    T: np.ndarray
    flagged: np.ndarray
    counts: np.ndarray
    max_reflection_error: float
    horizon: float
    single: bool = False

    @property
    def n_paths(self):
        return int(self.T.size)

    @property
    def ok(self):
        return ~self.flagged

    @property
    def failure_fraction(self):
        return float(self.flagged.mean()) if self.n_paths else 0.0

    @property
    def run_flagged(self):
        return self.failure_fraction > FAILURE_BUDGET

    def Z(self):
        """``|X_t - Y_t|`` for the non-flagged paths, shape ``(n, len(times))``."""
        return np.linalg.norm(self.X[self.ok] - self.Y[self.ok], axis=-1)

    def summary(self):
        ok = self.ok
        n_ok = int(ok.sum())
        out = {
            "n_paths": self.n_paths,
            "n_flagged": int(self.flagged.sum()),
            "failure_fraction": self.failure_fraction,
            "run_flagged": self.run_flagged,
            "horizon": self.horizon,
            "times": [float(t) for t in self.times],
        }
        if self.single or n_ok == 0:
            if n_ok:
                out["mean_X"] = self.X[ok].mean(axis=0).tolist()
            return out
        Z = self.Z()
        T = self.T[ok]
        out.update({
            "uncoupled_fraction": [float(v) for v in np.mean(Z > 0, axis=0)],
            "mean_abs_Z": [float(v) for v in Z.mean(axis=0)],
            "mean_X": [[float(u) for u in row] for row in self.X[ok].mean(axis=0)],
            "mean_Y": [[float(u) for u in row] for row in self.Y[ok].mean(axis=0)],
            "coupled_by_horizon": float(np.mean(np.isfinite(T))),
            "mean_coupling_time": float(T[np.isfinite(T)].mean()) if np.isfinite(T).any() else None,
            "decision_counts": dict(zip(DECISIONS, (int(c) for c in self.counts[ok].sum(axis=0)))),
            "max_reflection_error": self.max_reflection_error,
        })
        return out


def _check_start(start):
    if start not in ("x", "y"):
        raise ConfigurationError("start must be 'x' or 'y'")


def run_ensemble(cfg, threads=1, single=False, start="x"):
    """All ``cfg.n_paths`` paths; output is independent of ``threads``.

    With ``single=True`` the uncoupled equation is solved from ``x0`` or
    ``y0`` (``start``) and ``Y`` mirrors ``X``.
    """
    _check_start(start)
    n, d, k = cfg.n_paths, cfg.dimension, len(cfg.sample_times)
    X = np.full((n, k, d), np.nan)
    Y = np.full((n, k, d), np.nan)
    T = np.full(n, np.inf)
    flagged = np.zeros(n, dtype=bool)
    counts = np.zeros((n, 4), dtype=np.int64)
    errs = np.zeros(n)
    enc = _encode(cfg)
    stream = SINGLE_STREAM if single else COUPLED_STREAM

    def work(idx):
        for i in idx:
            sx, sy, Ti, fl, cnt, _, err = _run_path(cfg, i, stream, False, enc, start)
            X[i], Y[i], T[i], flagged[i], counts[i], errs[i] = sx, sy, Ti, fl, cnt, err

    chunks = [range(s, min(s + 64, n)) for s in range(0, n, 64)]
    if threads <= 1 or len(chunks) <= 1:
        for c in chunks:
            work(c)
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            list(ex.map(work, chunks))
    ens = Ensemble(
        times=np.asarray(cfg.sample_times), X=X, Y=Y, T=T, flagged=flagged, counts=counts,
        max_reflection_error=float(errs.max()) if n else 0.0,
        horizon=cfg.horizon, single=single,
    )
    if ens.run_flagged:
        log.warning("%d of %d paths blew up (above the %.1g budget)",
                    int(flagged.sum()), n, FAILURE_BUDGET)
    return ens

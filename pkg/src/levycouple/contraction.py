"""Concave distance function ``f = f1 + a 1_(0,inf)`` and the contraction constants.

Everything is tabulated on a uniform grid whose step divides ``epsilon``
exactly, so shifts by ``epsilon`` are index shifts and the sliding suprema
over windows of length ``epsilon`` are exact on the grid.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.ndimage import maximum_filter1d

from . import drift as drift_mod
from . import levy_measure as lm
from .errors import DomainError, FeasibilityError

log = logging.getLogger(__name__)

PROOF = "proof"
STATEMENT = "statement"


def uniform_grid(epsilon, r_max, n_sub=1000):
    """Grid ``0, dr, 2 dr, ...`` with ``dr = epsilon / n_sub`` covering ``[0, r_max]``."""
    dr = epsilon / n_sub
    n = int(math.ceil(r_max / dr)) + 1
    return dr * np.arange(n)


def _window(grid, epsilon):
    dr = grid[1] - grid[0]
    W = int(round(epsilon / dr))
    if W < 1 or abs(W * dr - epsilon) > 1e-9 * epsilon:
        raise DomainError("grid step must divide epsilon")
    return W


def build_h_bar(kappa, epsilon, grid):
    """``h_bar(r) = sup_{t in [r, r + eps]} t kappa^-(t)`` on the grid.

    The supremum runs over the closed sub-grid of the window, which can only
    overestimate the open-interval value.
    """
    W = _window(grid, epsilon)
    dr = grid[1] - grid[0]
    ext = grid[0] + dr * np.arange(grid.size + W)
    hk = ext * np.maximum(-np.asarray(kappa(ext), dtype=float), 0.0)
    out = maximum_filter1d(hk, size=W + 1, origin=-((W + 1) // 2), mode="nearest")
    return out[: grid.size]


def build_phi_Phi(h_bar, C_eps, grid):
    """``phi = exp(-int_0^r h_bar / C_eps)`` and ``Phi = int_0^r phi``."""
    if not C_eps > 0:
        raise DomainError("C_eps must be positive")
    inner = cumulative_trapezoid(h_bar / C_eps, grid, initial=0.0)
    if inner[-1] > 700.0:
        raise DomainError(
            f"int h_bar / C_eps reaches {inner[-1]:.1f}; kappa is too negative for this grid"
        )
    phi = np.exp(-inner)
    Phi = cumulative_trapezoid(phi, grid, initial=0.0)
    return phi, Phi


def build_g_f1_c1(phi, Phi, epsilon, R1, C_eps, grid):
    """Tables of ``g`` and ``f1`` and the constant ``c1``.

    The returned tables are shorter than the inputs by ``epsilon / dr``
    entries, because ``Phi(t + eps)`` is needed at every node.
    """
    W = _window(grid, epsilon)
    n = grid.size - W
    r = grid[:n]
    if not R1 < r[-1]:
        raise DomainError("grid too short for R1")
    dr = grid[1] - grid[0]
    ratio = Phi[W:] / phi[:n]
    I = cumulative_trapezoid(ratio, r, initial=0.0)
    k = int(np.searchsorted(r, R1, side="right") - 1)
    t = R1 - r[k]
    ratio_R1 = np.interp(R1, r, ratio)
    I_R1 = I[k] + 0.5 * t * (ratio[k] + ratio_R1)
    c1 = C_eps / (2.0 * I_R1)
    g = np.where(r < R1, 1.0 - 0.5 * I / I_R1, 0.5)
    fg = phi[:n] * g
    inc = 0.5 * dr * (fg[1:] + fg[:-1])
    # the cell holding R1 is split at the kink of g
    if k + 1 < n:
        phi_R1 = np.interp(R1, r, phi[:n])
        inc[k] = 0.5 * t * (fg[k] + 0.5 * phi_R1) + 0.5 * (dr - t) * (0.5 * phi_R1 + fg[k + 1])
    f1 = np.concatenate([[0.0], np.cumsum(inc)])
    return g, f1, float(c1)


def assemble_constants(f1_delta, delta, C_delta, C_L, c1, convention=PROOF):
    """``(K, a, c)`` from ``f1(delta)``, the overlap constant and ``c1``.

    ``convention="proof"`` uses ``C_delta f1(delta) / 4`` in ``K``;
    ``"statement"`` uses ``/ 2``.  Both give ``K = 1`` when ``C_L = 0``.
    """
    if not C_delta > 0:
        raise FeasibilityError("Assumption 3 violated: overlap constant is zero", 3)
    if not f1_delta > 0:
        raise DomainError("f1(delta) must be positive")
    div = {PROOF: 4.0, STATEMENT: 2.0}.get(convention)
    if div is None:
        raise DomainError(f"unknown K convention {convention!r}")
    base = C_delta * f1_delta / div
    K = (C_L * delta + base) / base
    a = K * f1_delta
    c = min(c1 / (2.0 * K), C_delta / 4.0)
    return float(K), float(a), float(c)


@dataclass(frozen=True, eq=False)
class DistanceFunction:
    epsilon: float
    delta: float
    m: float
    C_eps: float
    C_delta: float
    C_delta_m: float
    C_L: float
    R0: float
    R1: float
    c1: float
    K: float
    a: float
    c: float
    convention: str
    grid: np.ndarray = field(repr=False)
    h_bar: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)
    Phi: np.ndarray = field(repr=False)
    g: np.ndarray = field(repr=False)
    f1: np.ndarray = field(repr=False)
    eta: float | None = None
    converged: bool = True
    levels: int = 1

    @property
    def phi_R0(self):
        return float(self.phi[-1])

    @property
    def prefactor_tv(self):
        return 2.0 / self.a

    @property
    def prefactor_w1(self):
        return 2.0 / self.phi_R0

    @property
    def r(self):
        return self.grid[: self.f1.size]

    def f1_eval(self, r):
        r = np.asarray(r, dtype=float)
        rt = self.r
        inside = np.interp(r, rt, self.f1)
        beyond = self.f1[-1] + 0.5 * self.phi_R0 * (r - rt[-1])
        out = np.where(r <= rt[-1], inside, beyond)
        return out if out.ndim else float(out)

    def f1_prime(self, r):
        r = np.asarray(r, dtype=float)
        phi = np.interp(r, self.grid, self.phi)
        g = np.where(r < self.R1, np.interp(r, self.r, self.g), 0.5)
        out = phi * g
        return out if out.ndim else float(out)

    def f1_second(self, x, side="left"):
        """One-sided ``f1''``; the two sides differ only at ``R1``."""
        x = np.asarray(x, dtype=float)
        hb = np.interp(x, self.grid, self.h_bar)
        phi = np.interp(x, self.grid, self.phi)
        Phi_s = np.interp(x + self.epsilon, self.grid, self.Phi)
        below = x < self.R1 if side == "right" else x <= self.R1
        g = np.where(below, np.interp(x, self.r, self.g), 0.5)
        out = -hb * phi * g / self.C_eps - below * (self.c1 / self.C_eps) * Phi_s
        return out if out.ndim else float(out)

    def __call__(self, r):
        return f_eval(self, r)

    def to_dict(self):
        return {
            "epsilon": self.epsilon,
            "delta": self.delta,
            "m": self.m,
            "eta": self.eta,
            "C_eps": self.C_eps,
            "C_delta": self.C_delta,
            "C_delta_m": self.C_delta_m,
            "C_L": self.C_L,
            "R0": self.R0,
            "R1": self.R1,
            "phi_R0": self.phi_R0,
            "c1": self.c1,
            "K": self.K,
            "a": self.a,
            "c": self.c,
            "f1_delta": float(self.f1_eval(self.delta)),
            "prefactor_tv": self.prefactor_tv,
            "prefactor_w1": self.prefactor_w1,
            "k_convention": self.convention,
            "grid_step": float(self.grid[1] - self.grid[0]),
            "grid_converged": self.converged,
        }

    def write_csv(self, path, stride=None):
        """Rows ``(r, phi, Phi, g, f1, f)``; by default about 2000 rows."""
        r = self.r
        stride = stride or max(1, r.size // 2000)
        idx = np.arange(0, r.size, stride)
        fvals = f_eval(self, r[idx])
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r", "phi", "Phi", "g", "f1", "f"])
            for j, i in enumerate(idx):
                w.writerow([repr(float(v)) for v in
                            (r[i], self.phi[i], self.Phi[i], self.g[i], self.f1[i], fvals[j])])


def f_eval(df, r):
    """``f(r) = f1(r) + a`` for ``r > 0`` and ``f(0) = 0``."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DomainError("distance must be nonnegative")
    out = np.where(r > 0, df.f1_eval(r) + df.a, 0.0)
    return out if out.ndim else float(out)


def _tables(kappa, epsilon, C_eps, R1, r_max, n_sub):
    grid = uniform_grid(epsilon, r_max + 2 * epsilon, n_sub)
    h_bar = build_h_bar(kappa, epsilon, grid)
    phi, Phi = build_phi_Phi(h_bar, C_eps, grid)
    g, f1, c1 = build_g_f1_c1(phi, Phi, epsilon, R1, C_eps, grid)
    return grid, h_bar, phi, Phi, g, f1, c1


def build_distance_function(
    kappa,
    *,
    epsilon,
    delta,
    C_eps,
    C_delta,
    C_L,
    R0,
    R1,
    m=math.inf,
    C_delta_m=None,
    eta=None,
    convention=PROOF,
    r_max=None,
    n_sub=1000,
    rtol=1e-8,
    max_levels=4,
):
    """Tabulate ``h_bar, phi, Phi, g, f1`` and assemble ``K, a, c``.

    The grid is halved until ``phi(R0)`` and ``c1`` change by less than
    ``rtol`` (relative) between consecutive levels, at most ``max_levels``
    times; ``converged`` records the outcome.
    """
    if epsilon > delta:
        raise FeasibilityError("Assumption 4 requires eps <= delta", 4)
    if r_max is None:
        r_max = max(10.0 * R1, delta, R0 + epsilon) + epsilon
    prev = None
    converged = False
    level = 0
    for level in range(max_levels + 1):
        tabs = _tables(kappa, epsilon, C_eps, R1, r_max, n_sub * 2**level)
        cur = (tabs[2][-1], tabs[6])
        if prev is not None:
            diffs = [abs(a - b) / abs(b) for a, b in zip(cur, prev)]
            if max(diffs) < rtol:
                converged = True
                break
        prev = cur
    if not converged:
        log.warning("distance tables did not stabilise to %g after %d refinements", rtol, level)
    grid, h_bar, phi, Phi, g, f1, c1 = tabs
    r = grid[: f1.size]
    f1_delta = float(np.interp(delta, r, f1))
    K, a, c = assemble_constants(f1_delta, delta, C_delta, C_L, c1, convention)
    return DistanceFunction(
        epsilon=epsilon, delta=delta, m=m, C_eps=C_eps, C_delta=C_delta,
        C_delta_m=C_delta if C_delta_m is None else C_delta_m, C_L=C_L, R0=R0, R1=R1,
        c1=c1, K=K, a=a, c=c, convention=convention, grid=grid, h_bar=h_bar, phi=phi,
        Phi=Phi, g=g, f1=f1, eta=eta, converged=converged, levels=level + 1,
    )


def distance_from_model(
    measure,
    drift,
    epsilon,
    delta=None,
    *,
    convention=PROOF,
    variance_fraction=0.25,
    C_L=None,
    m=None,
    **table_kw,
):
    """Run the whole constant pipeline for a noise and a drift.

    ``m`` may be pinned; otherwise it is chosen by the doubling search.
    """
    delta = epsilon if delta is None else delta
    C_eps = lm.c_epsilon(measure, epsilon)
    C_delta = lm.c_delta_overlap(measure, delta)
    if C_delta <= 0:
        raise FeasibilityError(
            f"Assumption 3 violated: overlap vanishes for some 0 < |x| <= delta = {delta:g}", 3
        )
    if m is None:
        trunc = lm.select_truncation_m(
            measure, epsilon, delta, variance_fraction=variance_fraction,
            c_eps=C_eps, c_delta=C_delta,
        )
        m, eta, C_delta_m = trunc.m, trunc.eta, trunc.checks["c_delta_m"]
    else:
        C_delta_m = lm.c_delta_overlap(measure, delta, m)
        eta = lm.choose_eta(measure, m, variance_fraction * C_eps)
    R0 = drift_mod.radius_R0(drift.kappa)
    R1 = drift_mod.radius_R1(drift.kappa, R0, epsilon, C_eps)
    return build_distance_function(
        drift.kappa, epsilon=epsilon, delta=delta, C_eps=C_eps, C_delta=C_delta,
        C_L=drift.C_L if C_L is None else C_L, R0=R0, R1=R1, m=m, C_delta_m=C_delta_m,
        eta=eta, convention=convention, **table_kw,
    )


@dataclass
class InequalityReport:
    r: np.ndarray
    lhs: np.ndarray
    tol: float

    @property
    def max_violation(self):
        return float(np.max(self.lhs))

    @property
    def passed(self):
        return self.max_violation <= self.tol


def verify_functional_inequality(df, kappa, r_max=None, n_points=2000, n_sub=1000, tol=1e-8):
    """Evaluate ``-f1'(r) kappa(r) r + C_eps fbar_eps(r) + c1 f1(r)`` on ``(delta, r_max]``.

    ``fbar_eps(r)`` is the supremum of ``f1''`` over ``n_sub - 1`` interior
    points of ``(r - eps, r)``, plus the right limit at ``R1`` when ``R1``
    lies inside the window.
    """
    eps = df.epsilon
    if r_max is None:
        r_max = 10.0 * df.R1
    r = np.linspace(df.delta, r_max, n_points + 1)[1:]
    offs = eps * np.arange(1, n_sub) / n_sub
    fbar = np.empty_like(r)
    for s in range(0, r.size, 200):
        rr = r[s:s + 200]
        x = rr[:, None] - eps + offs[None, :]
        fbar[s:s + 200] = np.max(df.f1_second(x, side="right"), axis=1)
    at_R1 = (r - eps < df.R1) & (df.R1 < r)
    fbar = np.where(at_R1, np.maximum(fbar, df.f1_second(df.R1, side="right")), fbar)
    kap = np.asarray(kappa(r), dtype=float)
    lhs = -df.f1_prime(r) * kap * r + df.C_eps * fbar + df.c1 * df.f1_eval(r)
    return InequalityReport(r=r, lhs=lhs, tol=tol)


def scan_epsilon(measure, drift, eps_values, **kw):
    """Contraction rate ``c`` for ``eps = delta`` over a list of values (no optimality claim)."""
    out = []
    for e in eps_values:
        try:
            c = distance_from_model(measure, drift, e, e, **kw).c
        except (FeasibilityError, DomainError) as exc:
            log.info("eps = %g infeasible: %s", e, exc)
            c = float("nan")
        out.append((float(e), c))
    return out


def example_epsilon0(alpha, R):
    """Maximiser in eps of ``C_eps / (2 R^2 + 4 eps R)`` for the 1-d stable noise, alpha in (1, 2)."""
    return (2.0 - alpha) * R / (2.0 * alpha - 2.0)


def example_c1_lower(C_eps, epsilon, R):
    """``C_eps / (2 R^2 + 4 eps R)``: lower bound for ``c1 / 2K`` when ``phi = 1`` and ``C_L = 0``."""
    return C_eps / (2.0 * R * R + 4.0 * epsilon * R)

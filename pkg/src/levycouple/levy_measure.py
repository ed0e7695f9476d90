"""Rotationally invariant pure-jump Lévy measures.

A measure is described by its radial profile ``q(v) = q_r(|v|)`` (jump
intensity per unit volume).  Three families are supported:

* ``alpha-stable``: ``q_r(r) = r**(-d - alpha)`` with ``alpha`` in (0, 2);
* ``shell-uniform``: ``q = 1`` on ``theta/beta <= |v| <= theta`` (d = 1 only);
* ``tabulated-radial``: a radial profile given on a grid, interpolated with a
  monotone cubic and set to zero off the grid.

Besides evaluation and sampling, this module computes the small-jump
constant ``C_eps``, the overlap constant of the density with its translates,
the truncation radius ``m`` and the control probability ``rho`` used by the
coupling.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import integrate, optimize, special
from scipy.interpolate import PchipInterpolator

from .errors import ConfigurationError, DomainError, FeasibilityError

log = logging.getLogger(__name__)

ALPHA_STABLE = "alpha-stable"
SHELL_UNIFORM = "shell-uniform"
TABULATED = "tabulated-radial"
KINDS = (ALPHA_STABLE, SHELL_UNIFORM, TABULATED)

# adaptive quadrature tolerances for every density integral
QUAD_ABS = 1e-10
QUAD_REL = 1e-8
QUAD_LIMIT = 400


def sphere_area(d):
    """Surface area of the unit sphere in R^d (``2`` for d = 1)."""
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def _quad(fn, a, b, points=None):
    if not b > a:
        return 0.0
    kw = dict(epsabs=QUAD_ABS, epsrel=QUAD_REL, limit=QUAD_LIMIT)
    finite = np.isfinite(a) and np.isfinite(b)
    if points is not None and finite:
        pts = [p for p in points if a < p < b]
        if pts:
            kw["points"] = pts
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(fn, a, b, **kw)
    return val


def _quad_split(fn, a, b, points=()):
    """Integrate over [a, b] splitting at every breakpoint (ends may be infinite)."""
    cuts = sorted({p for p in points if a < p < b})
    edges = [a, *cuts, b]
    return sum(_quad(fn, lo, hi) for lo, hi in zip(edges[:-1], edges[1:]))


@dataclass(frozen=True, eq=False)
class RadialLevyMeasure:
    kind: str
    dimension: int = 1
    alpha: float | None = None
    theta: float | None = None
    beta: float | None = None
    radii: np.ndarray | None = None
    values: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown measure kind {self.kind!r}")
        if int(self.dimension) != self.dimension or self.dimension < 1:
            raise DomainError("dimension must be a positive integer")
        if self.kind == ALPHA_STABLE:
            if self.alpha is None or not 0.0 < self.alpha < 2.0:
                raise DomainError("alpha-stable measure needs alpha in (0, 2)")
        elif self.kind == SHELL_UNIFORM:
            if self.dimension != 1:
                raise DomainError("shell-uniform measure is defined for d = 1 only")
            if self.theta is None or self.theta <= 0 or self.beta is None or self.beta <= 1:
                raise DomainError("shell-uniform measure needs theta > 0 and beta > 1")
        else:
            r = np.asarray(self.radii, dtype=float)
            q = np.asarray(self.values, dtype=float)
            if r.ndim != 1 or r.shape != q.shape or r.size < 4:
                raise DomainError("tabulated measure needs >= 4 matching radius/value pairs")
            if np.any(np.diff(r) <= 0) or r[0] < 0:
                raise DomainError("tabulated radii must be nonnegative and strictly increasing")
            if np.any(q < 0) or not np.all(np.isfinite(q)):
                raise DomainError("tabulated densities must be finite and nonnegative")
            object.__setattr__(self, "radii", r)
            object.__setattr__(self, "values", q)
            total = self.moment2(0.0, 1.0) + self.tail_mass(1.0)
            if not np.isfinite(total):
                raise DomainError("tabulated measure fails the integrability condition")

    # -- constructors -----------------------------------------------------
    @classmethod
    def alpha_stable(cls, alpha, dimension=1):
        return cls(ALPHA_STABLE, dimension=dimension, alpha=float(alpha))

    @classmethod
    def shell_uniform(cls, theta, beta):
        return cls(SHELL_UNIFORM, dimension=1, theta=float(theta), beta=float(beta))

    @classmethod
    def tabulated(cls, radii, values, dimension=1):
        return cls(TABULATED, dimension=dimension, radii=radii, values=values)

    # -- evaluation -------------------------------------------------------
    @cached_property
    def _pchip(self):
        return PchipInterpolator(self.radii, self.values, extrapolate=False)

    @property
    def inner_radius(self):
        """Largest radius below which the measure carries no mass."""
        if self.kind == ALPHA_STABLE:
            return 0.0
        if self.kind == SHELL_UNIFORM:
            return self.theta / self.beta
        pos = np.flatnonzero(self.values > 0)
        if pos.size == 0:
            return float(self.radii[-1])
        return float(self.radii[max(pos[0] - 1, 0)]) if pos[0] > 0 else float(self.radii[0])

    @property
    def outer_radius(self):
        if self.kind == ALPHA_STABLE:
            return math.inf
        if self.kind == SHELL_UNIFORM:
            return self.theta
        return float(self.radii[-1])

    @property
    def breakpoints(self):
        """Radii where the radial profile is not smooth."""
        if self.kind == SHELL_UNIFORM:
            return (self.theta / self.beta, self.theta)
        if self.kind == TABULATED:
            r = self.radii
            if r.size > 64:
                r = r[np.linspace(0, r.size - 1, 64).astype(int)]
            return tuple(float(x) for x in r)
        return ()

    def radial(self, r):
        """Radial profile ``q_r(r)``; infinite at r = 0 for the stable kind."""
        r = np.abs(np.asarray(r, dtype=float))
        if self.kind == ALPHA_STABLE:
            with np.errstate(divide="ignore", over="ignore"):
                out = np.where(r > 0, r ** (-self.dimension - self.alpha), np.inf)
        elif self.kind == SHELL_UNIFORM:
            out = ((r >= self.theta / self.beta) & (r <= self.theta)).astype(float)
        else:
            out = np.nan_to_num(self._pchip(r), nan=0.0)
            out = np.clip(out, 0.0, None)
        return out if out.ndim else float(out)

    def norm(self, v):
        v = np.asarray(v, dtype=float)
        if self.dimension == 1 and (v.ndim == 0 or v.shape[-1] != 1):
            return np.abs(v)
        return np.linalg.norm(v, axis=-1)

    def density(self, v):
        """Jump density ``q(v)``.  For d = 1, ``v`` may be a plain array of reals."""
        return self.radial(self.norm(v))

    def radial_law(self, r):
        """Density of |v| under the measure: ``|S^{d-1}| r^{d-1} q_r(r)``."""
        r = np.asarray(r, dtype=float)
        d = self.dimension
        return sphere_area(d) * r ** (d - 1) * self.radial(r)

    def tail_mass(self, lo, hi=math.inf):
        """``nu({lo < |v| <= hi})``."""
        if not hi > lo:
            return 0.0
        if self.kind == ALPHA_STABLE:
            a, S = self.alpha, sphere_area(self.dimension)
            if lo <= 0:
                return math.inf
            upper = 0.0 if math.isinf(hi) else hi ** (-a)
            return S * (lo ** (-a) - upper) / a
        if self.kind == SHELL_UNIFORM:
            a, b = max(lo, self.theta / self.beta), min(hi, self.theta)
            return 2.0 * max(b - a, 0.0)
        lo, hi = max(lo, 0.0), min(hi, self.outer_radius)
        return _quad_split(lambda r: float(self.radial_law(r)), lo, hi, self.breakpoints)

    def moment2(self, lo, hi=math.inf):
        """``int_{lo < |v| <= hi} |v|^2 nu(dv)``."""
        if not hi > lo:
            return 0.0
        lo = max(lo, 0.0)
        if self.kind == ALPHA_STABLE:
            a, S = self.alpha, sphere_area(self.dimension)
            if math.isinf(hi):
                return math.inf
            return S * (hi ** (2 - a) - lo ** (2 - a)) / (2 - a)
        if self.kind == SHELL_UNIFORM:
            a, b = max(lo, self.theta / self.beta), min(hi, self.theta)
            return 2.0 * max(b**3 - a**3, 0.0) / 3.0
        hi = min(hi, self.outer_radius)
        return _quad_split(lambda r: r * r * float(self.radial_law(r)), lo, hi, self.breakpoints)

    # -- sampling ---------------------------------------------------------
    @cached_property
    def _radial_cdf_table(self):
        r = np.linspace(self.radii[0], self.radii[-1], 20001)
        w = self.radial_law(r)
        cdf = np.concatenate([[0.0], np.cumsum(0.5 * (w[1:] + w[:-1]) * np.diff(r))])
        return r, cdf

    def sample_radii(self, rng, n, eta):
        """Draw ``n`` radii from the normalised law of |v| on (eta, inf)."""
        u = 1.0 - rng.random(n)
        if self.kind == ALPHA_STABLE:
            return eta * u ** (-1.0 / self.alpha)
        if self.kind == SHELL_UNIFORM:
            a = max(eta, self.theta / self.beta)
            return a + (self.theta - a) * (1.0 - u)
        r, cdf = self._radial_cdf_table
        c0 = np.interp(eta, r, cdf)
        return np.interp(c0 + (cdf[-1] - c0) * (1.0 - u), cdf, r)

    def sample_directions(self, rng, n):
        d = self.dimension
        if d == 1:
            return np.where(rng.random(n) < 0.5, -1.0, 1.0)[:, None]
        g = rng.standard_normal((n, d))
        return g / np.linalg.norm(g, axis=1, keepdims=True)


@dataclass(frozen=True)
class TruncationParams:
    """Truncation radius ``m`` of the coupled jumps and simulation cutoff ``eta``."""

    m: float
    eta: float
    checks: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not (self.m > 0 and 0 < self.eta < self.m):
            raise ConfigurationError(f"need 0 < eta < m, got eta={self.eta}, m={self.m}")


class MarginalMeasure:
    """Law of the projection of ``nu`` restricted to ``|v| <= m`` onto a unit direction.

    For d > 1 the truncated marginal is the push-forward of ``1{|v|<=m} nu``
    (not the restriction of the full marginal to ``|y| <= m``).
    """

    def __init__(self, measure, m=math.inf):
        self.measure = measure
        self.m = float(m)

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        if y.ndim:
            return np.array([self._eval(float(t)) for t in y.ravel()]).reshape(y.shape)
        return self._eval(float(y))

    def _eval(self, y):
        mu, m = self.measure, self.m
        y = abs(y)
        if y > m:
            return 0.0
        d = mu.dimension
        if d == 1:
            return float(mu.radial(y))
        if y == 0.0 and mu.kind == ALPHA_STABLE:
            return math.inf
        S = sphere_area(d - 1)
        smax = math.sqrt(m * m - y * y) if math.isfinite(m) else math.inf
        pts = [math.sqrt(b * b - y * y) for b in mu.breakpoints if b > y]

        def integrand(s):
            return S * float(mu.radial(math.hypot(y, s))) * s ** (d - 2)

        return _quad_split(integrand, 0.0, smax, pts)

    def moment2(self, lo, hi):
        """``int_lo^hi y^2 nu_1^m(dy)`` for ``0 <= lo < hi``."""
        mu = self.measure
        hi = min(hi, self.m)
        if not hi > lo:
            return 0.0
        if mu.dimension == 1:
            return 0.5 * mu.moment2(lo, hi)
        pts = list(mu.breakpoints)
        return _quad_split(lambda y: y * y * self._eval(y), lo, hi, pts)


def marginal_density(measure, m=math.inf):
    """Density of the one-dimensional marginal of the (truncated) measure."""
    if not m > 0:
        raise DomainError("truncation radius must be positive")
    if measure.kind == TABULATED and np.count_nonzero(measure.radii <= m) < 2:
        raise DomainError("tabulated grid has fewer than two nodes inside the truncation radius")
    return MarginalMeasure(measure, m)


def c_epsilon(measure, epsilon, method="auto", strict=True):
    """``C_eps = 2 int_{-eps/4}^0 y^2 nu_1(dy)`` for the untruncated marginal.

    ``method`` is ``"closed"`` (d = 1 stable only), ``"quadrature"`` or
    ``"auto"``.  A vanishing value means the small-jump assumption fails; with
    ``strict`` this raises :class:`FeasibilityError`, otherwise 0 is returned.
    """
    if not epsilon > 0:
        raise DomainError("epsilon must be positive")
    closed_ok = measure.kind == ALPHA_STABLE and measure.dimension == 1
    if method == "auto":
        method = "closed" if closed_ok else "quadrature"
    if method == "closed":
        if not closed_ok:
            raise DomainError("closed form available only for the 1-d alpha-stable measure")
        a = measure.alpha
        val = 2.0 / (2.0 - a) * (epsilon / 4.0) ** (2.0 - a)
    elif method == "quadrature":
        val = 2.0 * MarginalMeasure(measure).moment2(0.0, epsilon / 4.0)
    else:
        raise DomainError(f"unknown method {method!r}")
    if measure.tail_mass(0.0, epsilon / 2.0) <= 0:
        log.warning("Assumption 4 fails: no jump mass in |v| <= eps/2 = %g", epsilon / 2)
    if val <= 0:
        if strict:
            raise FeasibilityError(
                f"Assumption 4 violated: C_eps = 0 for eps = {epsilon:g} "
                "(no small-jump mass in (-eps/4, 0))",
                assumption=4,
            )
        return 0.0
    return float(val)


def _overlap_closed(alpha, x, m):
    if math.isinf(m):
        return (2.0 / alpha) * (2.0 / x) ** alpha
    if x >= 2 * m:
        return 0.0
    return (2.0 / alpha) * ((x / 2.0) ** (-alpha) - m ** (-alpha))


def overlap(measure, x, m=math.inf, method="auto"):
    """``int_{|v|<=m, |v+x|<=m} q(v) ^ q(v+x) dv`` for a displacement of length ``x``."""
    x = float(x)
    if not x > 0:
        raise DomainError("displacement length must be positive")
    closed_ok = measure.kind == ALPHA_STABLE and measure.dimension == 1
    if method == "auto":
        method = "closed" if closed_ok else "quadrature"
    if method == "closed":
        if not closed_ok:
            raise DomainError("closed form available only for the 1-d alpha-stable measure")
        return _overlap_closed(measure.alpha, x, m)
    # along the axis of the displacement: v = (t, s w), |w| = 1, s >= 0
    lo, hi = -m, m - x
    if not hi > lo:
        return 0.0
    bps = [0.0, -x, -x / 2.0]
    for b in measure.breakpoints:
        bps += [b, -b, b - x, -b - x]
    d = measure.dimension
    if d == 1:
        def fn(t):
            return min(float(measure.radial(t)), float(measure.radial(t + x)))

        return _quad_split(fn, lo, hi, bps)
    S = sphere_area(d - 1)

    def inner(t):
        if math.isfinite(m):
            smax = math.sqrt(max(min(m * m - t * t, m * m - (t + x) ** 2), 0.0))
        else:
            smax = math.inf

        def g(s):
            a = float(measure.radial(math.hypot(t, s)))
            b = float(measure.radial(math.hypot(t + x, s)))
            return S * min(a, b) * s ** (d - 2)

        pts = []
        for b in measure.breakpoints:
            for c in (t, t + x):
                if b > abs(c):
                    pts.append(math.sqrt(b * b - c * c))
        return _quad_split(g, 0.0, smax, pts)

    return _quad_split(inner, lo, hi, bps)


def c_delta_overlap(measure, delta, m=math.inf, n_grid=64, method="auto", refine=True):
    """Infimum of the overlap over displacements ``0 < |x| <= delta``.

    The overlap depends on |x| only, so the infimum is taken over a geometric
    grid of ``n_grid`` magnitudes in ``[delta/1000, delta)`` plus ``delta``
    and the kink locations generated by the profile's breakpoints (and ``m``),
    then refined locally around the grid minimiser.  Returns 0 (no error)
    when the overlap vanishes somewhere.
    """
    if not delta > 0:
        raise DomainError("delta must be positive")
    grid = np.append(delta * np.geomspace(1e-3, 1.0, n_grid + 1)[:-1], delta)
    # the overlap has kinks where support edges of q and its translate meet
    edges = list(measure.breakpoints) + ([m] if math.isfinite(m) else [])
    kinks = {abs(a + sgn * b) for a in edges for b in edges + [0.0] for sgn in (1, -1)}
    kinks = [k for k in kinks if 0 < k < delta]
    if kinks:
        grid = np.unique(np.concatenate([grid, kinks]))
    vals = np.array([overlap(measure, x, m, method) for x in grid])
    k = int(np.argmin(vals))
    best = float(vals[k])
    closed = method == "closed" or (
        method == "auto" and measure.kind == ALPHA_STABLE and measure.dimension == 1
    )
    if refine and not closed and best > 0:
        a = grid[max(k - 1, 0)]
        b = grid[min(k + 1, grid.size - 1)]
        if b > a:
            res = optimize.minimize_scalar(
                lambda x: overlap(measure, x, m, method),
                bounds=(a, b),
                method="bounded",
                options={"xatol": 1e-10 * delta},
            )
            best = min(best, float(res.fun))
    return max(best, 0.0)


def choose_eta(measure, m, budget):
    """Small-jump cutoff: largest ``eta <= m/2`` whose residual variance stays within ``budget``.

    Measures whose support avoids a ball around the origin get
    ``eta = inner_radius / 2`` so that no jump is dropped.
    """
    if measure.inner_radius > 0:
        return min(measure.inner_radius / 2.0, m / 2.0)
    if measure.kind == ALPHA_STABLE:
        a, S = measure.alpha, sphere_area(measure.dimension)
        eta = ((2.0 - a) * budget / S) ** (1.0 / (2.0 - a))
        return min(eta, m / 2.0)
    if measure.moment2(0.0, m / 2.0) <= budget:
        return m / 2.0
    return optimize.brentq(lambda e: measure.moment2(0.0, e) - budget, 0.0, m / 2.0, xtol=1e-14)


def select_truncation_m(
    measure,
    epsilon,
    delta=None,
    *,
    cap_factor=2**16,
    variance_fraction=0.25,
    c_eps=None,
    c_delta=None,
):
    """Smallest doubled ``m`` satisfying both truncation inequalities.

    Starts at ``m0 = max(1, 2 delta)`` and doubles up to ``cap_factor * m0``.
    The first inequality compares the truncated and untruncated small-jump
    moments; the second requires the truncated overlap constant to be at
    least half the untruncated one.
    """
    delta = epsilon if delta is None else delta
    if epsilon > delta:
        raise FeasibilityError(f"Assumption 4 requires eps <= delta (got {epsilon} > {delta})", 4)
    C_eps = c_epsilon(measure, epsilon) if c_eps is None else c_eps
    if C_eps <= 0:
        raise FeasibilityError("Assumption 4 violated: C_eps = 0", 4)
    C_delta = c_delta_overlap(measure, delta) if c_delta is None else c_delta
    if C_delta <= 0:
        raise FeasibilityError(
            f"Assumption 3 violated: overlap vanishes for some 0 < |x| <= delta = {delta:g}", 3
        )
    m0 = max(1.0, 2.0 * delta)
    m = m0
    failed = None
    while m <= cap_factor * m0:
        lhs1 = MarginalMeasure(measure, m).moment2(0.0, epsilon / 2.0)
        ok1 = lhs1 >= 0.5 * C_eps * (1 - 1e-12)
        C_delta_m = c_delta_overlap(measure, delta, m) if ok1 else 0.0
        ok2 = ok1 and C_delta_m >= 0.5 * C_delta * (1 - 1e-12)
        if ok1 and ok2:
            eta = choose_eta(measure, m, variance_fraction * C_eps)
            checks = {
                "small_jump_moment_m": lhs1,
                "small_jump_moment_target": 0.5 * C_eps,
                "c_delta_m": C_delta_m,
                "c_delta": C_delta,
            }
            return TruncationParams(m=m, eta=eta, checks=checks)
        failed = "small-jump moment inequality" if not ok1 else "overlap inequality"
        m *= 2.0
    raise FeasibilityError(f"no truncation radius up to {cap_factor * m0:g} satisfies the {failed}")


def rho(measure, v, z, m, eta=0.0):
    """Probability that the second process jumps onto the first one's new position.

    ``q(v) ^ q(v + z) 1{|v + z| <= m} / q(v)``, set to 1 where ``q(v) = 0``
    or ``z = 0``.  With ``eta > 0`` the density is that of the simulated
    (cut-off) measure ``q 1{|v| > eta}``.
    """
    v = np.asarray(v, dtype=float)
    z = np.asarray(z, dtype=float)
    w = v + z
    nv, nw, nz = measure.norm(v), measure.norm(w), measure.norm(z)
    qv = np.where(nv > eta, measure.radial(nv), 0.0) if eta > 0 else measure.radial(nv)
    qw = np.where(nw > eta, measure.radial(nw), 0.0) if eta > 0 else measure.radial(nw)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.minimum(qv, qw) * (nw <= m) / qv
    out = np.where((qv == 0) | (nz == 0), 1.0, out)
    out = np.where(np.isinf(qv) & np.isinf(qw), 1.0, out)
    out = np.nan_to_num(out, nan=1.0)
    return out if out.ndim else float(out)


def sample_jumps(measure, trunc, horizon, rng, t0=0.0):
    """Compound-Poisson jumps with ``|v| > eta`` on ``(t0, t0 + horizon]``.

    Returns ``(times, jumps)`` with ``times`` sorted and ``jumps`` of shape
    ``(n, d)``.  Jumps below ``eta`` are never drawn; their compensator is
    zero by symmetry.
    """
    if horizon < 0:
        raise DomainError("horizon must be nonnegative")
    lam = measure.tail_mass(trunc.eta)
    if not np.isfinite(lam):
        raise ConfigurationError(f"jump rate above eta = {trunc.eta} is not finite")
    d = measure.dimension
    if horizon == 0:
        return np.empty(0), np.empty((0, d))
    n = int(rng.poisson(lam * horizon))
    times = np.sort(t0 + horizon * (1.0 - rng.random(n)))
    radii = measure.sample_radii(rng, n, trunc.eta)
    jumps = radii[:, None] * measure.sample_directions(rng, n)
    return times, jumps


def stable_marginal_constant(alpha, d):
    """``nu_1(y) = const * |y|^{-1-alpha}`` for ``q = |v|^{-d-alpha}`` in R^d."""
    if d == 1:
        return 1.0
    return sphere_area(d - 1) * 0.5 * special.beta((d - 1) / 2.0, (1.0 + alpha) / 2.0)

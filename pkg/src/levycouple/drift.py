"""Drift fields, their contraction profile kappa and the radii R0, R1."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, FeasibilityError

LINEAR = "linear"
DOUBLE_WELL = "double-well"
STEP = "step-dissipative"
ZERO = "zero"
DRIFT_KINDS = (LINEAR, DOUBLE_WELL, STEP, ZERO)


@dataclass(frozen=True, eq=False)
class DriftSpec:
    """Drift ``b`` with its contraction profile and one-sided Lipschitz constant.

    ``kappa`` is a vectorised callable on radii.  ``b`` is ``None`` for
    profile-only kinds, which can feed the constants but not a simulation.
    """

    kind: str
    dimension: int
    kappa: Callable[[np.ndarray], np.ndarray]
    C_L: float
    b: Callable[[np.ndarray], np.ndarray] | None = None
    params: dict = field(default_factory=dict)

    @classmethod
    def linear(cls, M=1.0, dimension=1, C_L=None):
        """``b(x) = -M x`` with scalar ``M`` or a ``d x d`` matrix."""
        M_arr = np.asarray(M, dtype=float)
        if M_arr.ndim == 0:
            k = float(M_arr)
            mat = k * np.eye(dimension)
        else:
            if M_arr.shape != (dimension, dimension):
                raise DomainError("matrix M must be d x d")
            mat = M_arr
            k = float(np.linalg.eigvalsh(0.5 * (mat + mat.T)).min())

        def b(x):
            x = np.asarray(x, dtype=float)
            if dimension == 1 and (x.ndim == 0 or x.shape[-1] != 1):
                return -mat[0, 0] * x
            return -x @ mat.T

        def kappa(r):
            return np.full(np.shape(r), k) if np.ndim(r) else k

        C = default_one_sided_lipschitz(kappa) if C_L is None else float(C_L)
        return cls(LINEAR, dimension, kappa, C, b, {"M": M_arr.tolist()})

    @classmethod
    def double_well(cls, C_L=None):
        """``b(x) = x - x^3`` in d = 1, with ``kappa(r) = r^2/4 - 1``."""

        def b(x):
            x = np.asarray(x, dtype=float)
            return x - x**3

        def kappa(r):
            r = np.asarray(r, dtype=float)
            return r * r / 4.0 - 1.0

        C = default_one_sided_lipschitz(kappa) if C_L is None else float(C_L)
        return cls(DOUBLE_WELL, 1, kappa, C, b)

    @classmethod
    def step(cls, M, R, C_L=0.0, dimension=1):
        """Profile ``kappa(r) = M 1[r >= R]`` (no drift field attached)."""
        M, R = float(M), float(R)

        def kappa(r):
            r = np.asarray(r, dtype=float)
            return np.where(r >= R, M, 0.0)

        return cls(STEP, dimension, kappa, float(C_L), None, {"M": M, "R": R})

    @classmethod
    def zero(cls, dimension=1):
        """``b = 0``; violates the dissipativity-at-infinity assumption."""

        def kappa(r):
            return np.zeros(np.shape(r)) if np.ndim(r) else 0.0

        def b(x):
            return np.zeros_like(np.asarray(x, dtype=float))

        return cls(ZERO, dimension, kappa, 0.0, b)


def default_one_sided_lipschitz(kappa, r_max=100.0, n=20001):
    """``max(0, sup kappa^-)`` on a grid, plus 1e-9 slack when positive."""
    r = np.linspace(0.0, r_max, n)
    neg = float(np.max(np.maximum(-np.asarray(kappa(r)), 0.0)))
    return neg + 1e-9 if neg > 0 else 0.0


def kappa_oracle_1d(b, r, search_interval=(-10.0, 10.0), grid_n=200001):
    """Brute-force ``kappa(r)`` in d = 1: min over a grid of x of ``-(b(x+r) - b(x)) / r``."""
    if grid_n < 2:
        raise DomainError("grid_n must be at least 2")
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r_arr <= 0):
        raise DomainError("radius must be positive")
    x = np.linspace(search_interval[0], search_interval[1], int(grid_n))
    bx = np.asarray(b(x), dtype=float)
    if not np.all(np.isfinite(bx)):
        raise DomainError("drift is not finite on the search grid")
    out = np.empty_like(r_arr)
    for i, ri in enumerate(r_arr):
        by = np.asarray(b(x + ri), dtype=float)
        if not np.all(np.isfinite(by)):
            raise DomainError("drift is not finite on the search grid")
        out[i] = np.min(-(by - bx) * ri) / (ri * ri)
    return out if np.ndim(r) else float(out[0])


def check_assumption5(kappa, r_max, n=10001):
    """Raise unless ``kappa > 0`` on the last decade ``[r_max/10, r_max]``."""
    r = np.linspace(r_max / 10.0, r_max, n)
    if not np.min(kappa(r)) > 0:
        raise FeasibilityError(
            f"Assumption 5 fails: kappa is not positive on [{r_max / 10:g}, {r_max:g}]", 5
        )


def _bisect(pred, lo, hi, tol):
    # pred(lo) false, pred(hi) true
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi


def radius_R0(kappa, r_max=100.0, n_grid=100001, tol=1e-6):
    """``R0 = inf{R >= 0 : kappa(r) >= 0 for all r >= R}``."""
    check_assumption5(kappa, r_max)
    r = np.linspace(0.0, r_max, n_grid)
    k = np.asarray(kappa(r), dtype=float)
    neg = np.flatnonzero(k < 0)
    if neg.size == 0:
        return 0.0
    i = neg[-1]
    if i == n_grid - 1:
        raise FeasibilityError("Assumption 5 fails: kappa negative at r_max", 5)
    return float(_bisect(lambda R: kappa(R) >= 0, float(r[i]), float(r[i + 1]), tol))


def radius_R1(kappa, R0, epsilon, C_eps, r_max=None, n_grid=100001, tol=1e-6):
    """``R1 = inf{R >= R0 + eps : kappa(r) >= 2 C_eps / ((R - R0) R) for all r >= R}``.

    The predicate is monotone in ``R`` (suffix minimum of kappa grows, the
    threshold shrinks), so a grid scan followed by bisection locates it.
    """
    if not C_eps > 0:
        raise DomainError("C_eps must be positive")
    if r_max is None:
        r_max = 100.0 * max(1.0, R0 + epsilon)
    check_assumption5(kappa, r_max)
    start = R0 + epsilon
    r = np.linspace(start, r_max, n_grid)
    k = np.asarray(kappa(r), dtype=float)
    suffix_min = np.minimum.accumulate(k[::-1])[::-1]

    def thr(R):
        return 2.0 * C_eps / ((R - R0) * R)

    def pred(R):
        j = np.searchsorted(r, R, side="left")
        tail = suffix_min[j] if j < r.size else math.inf
        return min(float(kappa(R)), tail) >= thr(R)

    ok = suffix_min >= thr(r)
    if not ok.any():
        raise FeasibilityError(
            f"Assumption 5 fails: no R <= {r_max:g} with kappa >= 2 C_eps / ((R - R0) R) beyond R", 5
        )
    j = int(np.argmax(ok))
    if j == 0:
        return float(start)
    return float(_bisect(pred, float(r[j - 1]), float(r[j]), tol))

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from levycouple.drift import (
    DriftSpec,
    check_assumption5,
    default_one_sided_lipschitz,
    kappa_oracle_1d,
    radius_R0,
    radius_R1,
)
from levycouple.errors import DomainError, FeasibilityError

SQRT2 = math.sqrt(2.0)


def _double_well_kappa(r):
    return r * r / 4.0 - 1.0


@pytest.mark.parametrize("M", [0.5, 1.0, 3.0])
def test_oracle_linear(M):
    dr = DriftSpec.linear(M)
    r = np.linspace(0.1, 5.0, 100)
    assert np.allclose(kappa_oracle_1d(dr.b, r), M, atol=1e-12)


def test_oracle_double_well_examples():
    b = DriftSpec.double_well().b
    assert kappa_oracle_1d(b, 2.0) == pytest.approx(0.0, abs=1e-6)
    assert kappa_oracle_1d(b, 1.0) == pytest.approx(-0.75, abs=1e-6)


def test_oracle_double_well_profile():
    dr = DriftSpec.double_well()
    r = np.linspace(0.05, 5.0, 100)
    assert np.max(np.abs(kappa_oracle_1d(dr.b, r) - dr.kappa(r))) < 1e-6


def test_oracle_errors():
    with pytest.raises(DomainError):
        kappa_oracle_1d(lambda x: np.where(x > 5, np.inf, -x), 1.0)
    with pytest.raises(DomainError):
        kappa_oracle_1d(lambda x: -x, 1.0, grid_n=1)
    with pytest.raises(DomainError):
        kappa_oracle_1d(lambda x: -x, 0.0)


def test_linear_matrix_kappa():
    M = np.array([[2.0, 1.0], [-1.0, 0.5]])
    dr = DriftSpec.linear(M, dimension=2)
    assert dr.kappa(1.0) == pytest.approx(0.5)
    assert np.allclose(dr.b(np.array([1.0, 2.0])), -M @ np.array([1.0, 2.0]))
    assert dr.C_L == 0.0


def test_one_sided_lipschitz_double_well():
    dr = DriftSpec.double_well()
    assert dr.C_L == pytest.approx(1.0, abs=1e-8)
    rng = np.random.default_rng(0)
    x, y = rng.uniform(-5, 5, (2, 10_000))
    lhs = (dr.b(x) - dr.b(y)) * (x - y)
    assert np.all(lhs <= dr.C_L * (x - y) ** 2 + 1e-12)
    assert default_one_sided_lipschitz(lambda r: np.ones_like(r)) == 0.0


def test_R0_examples():
    assert radius_R0(lambda r: np.full(np.shape(r), 2.0)) == 0.0
    assert radius_R0(_double_well_kappa) == pytest.approx(2.0, abs=1e-6)
    # an indicator profile is nonnegative everywhere, so R0 = 0
    assert radius_R0(DriftSpec.step(2 * SQRT2, 1.0).kappa) == 0.0
    # negative below R: R0 = R
    prof = lambda r: np.where(np.asarray(r) >= 1.5, 1.0, -1.0)  # noqa: E731
    assert radius_R0(prof) == pytest.approx(1.5, abs=1e-6)


def test_assumption5_failure():
    with pytest.raises(FeasibilityError) as exc:
        radius_R0(DriftSpec.zero().kappa)
    assert exc.value.assumption == 5
    with pytest.raises(FeasibilityError):
        check_assumption5(lambda r: -np.ones_like(r), 100.0)


def test_R1_step_and_constant():
    step = DriftSpec.step(2 * SQRT2, 1.0).kappa
    assert radius_R1(step, 0.0, 0.5, SQRT2) == pytest.approx(1.0, abs=1e-6)
    const = lambda r: np.full(np.shape(r), 2 * SQRT2)  # noqa: E731
    assert radius_R1(const, 0.0, 0.5, SQRT2) == pytest.approx(1.0, abs=1e-6)


def _r1_inequality_holds(kappa, R, R0, C_eps, r_max=100.0):
    r = np.linspace(R, r_max, 200_001)
    return bool(np.all(kappa(r) >= 2 * C_eps / ((R - R0) * R)))


def test_R1_double_well_defining_inequality():
    R0 = radius_R0(_double_well_kappa)
    R1 = radius_R1(_double_well_kappa, R0, 0.5, SQRT2)
    assert R1 >= R0 + 0.5
    assert _r1_inequality_holds(_double_well_kappa, R1, R0, SQRT2)
    assert not _r1_inequality_holds(_double_well_kappa, R1 - 1e-3, R0, SQRT2)
    assert not _r1_inequality_holds(_double_well_kappa, R1 - 1e-5, R0, SQRT2)


@given(st.floats(0.2, 4.0), st.floats(0.1, 3.0), st.floats(0.1, 2.0), st.floats(0.1, 2.0))
def test_R0_R1_ordering(M, R, eps, C_eps):
    prof = lambda r: np.where(np.asarray(r) >= R, M, -0.5)  # noqa: E731
    R0 = radius_R0(prof)
    R1 = radius_R1(prof, R0, eps, C_eps)
    assert R0 <= R1 - eps + 1e-9
    assert _r1_inequality_holds(prof, R1, R0, C_eps, r_max=100 * max(1, R0 + eps))

import math

import pytest
from hypothesis import settings

from levycouple.drift import DriftSpec
from levycouple.levy_measure import RadialLevyMeasure

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

SQRT2 = math.sqrt(2.0)


@pytest.fixture(scope="session")
def stable15():
    return RadialLevyMeasure.alpha_stable(1.5, 1)


@pytest.fixture(scope="session")
def step_drift():
    """kappa = 2 sqrt(2) on [1, inf), zero below; C_L = 0."""
    return DriftSpec.step(2.0 * SQRT2, 1.0, C_L=0.0)


@pytest.fixture(scope="session")
def acceptance_log(pytestconfig):
    """Collects one (criterion, passed, detail) line per acceptance criterion."""
    if not hasattr(pytestconfig, "_acceptance_lines"):
        pytestconfig._acceptance_lines = []
    return pytestconfig._acceptance_lines


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, ok, detail in sorted(lines):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {number}: {name} -- {detail}")

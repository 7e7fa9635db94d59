import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from rffspec.errors import SupportWarning

settings.register_profile(
    "default", max_examples=40, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

STD_SIGMA = 1.0 / (2.0 * np.pi)


@pytest.fixture(autouse=True)
def _quiet_support_warnings():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SupportWarning)
        yield


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = {}


def record_acceptance(number, title, passed, detail):
    """Store and print one PASS/FAIL line for an acceptance criterion."""
    line = f"criterion {number:2d} {'PASS' if passed else 'FAIL'}: {title} ({detail})"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])

import os
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings

from toruslab.torus import IntMatrix

settings.register_profile("lab", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "lab"))

CAT = IntMatrix(((2, 1), (1, 1)))
CAT_T = IntMatrix(((1, 1), (1, 2)))
SALEM = IntMatrix.companion([1, -1, -1, -1])   # x^4 - x^3 - x^2 - x + 1
ROT4 = IntMatrix(((0, -1), (1, 0)))
F = Fraction


@pytest.fixture
def cat():
    return CAT


@pytest.fixture
def salem():
    return SALEM


# acceptance results, filled in by test_acceptance and printed after the run
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])

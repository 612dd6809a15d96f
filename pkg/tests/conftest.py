import numpy as np
import pytest

from disentbench.factors import FactorSpace

# acceptance lines collected by tests/test_acceptance.py, echoed at the end of the session
ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def space5():
    return FactorSpace.from_cardinalities([3, 4, 4, 5, 6])


@pytest.fixture
def space44():
    return FactorSpace.from_cardinalities([4, 4])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])

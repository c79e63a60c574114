import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))


def pytest_terminal_summary(terminalreporter):
    """One visible line per acceptance criterion at the end of the run."""
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)

from slowfast import (make_asymmetric_two_well, make_drift, make_example_u1,
                      make_example_u2, make_example_u3, make_quadratic_bowl)


@pytest.fixture(scope="session")
def u1():
    return make_example_u1()


@pytest.fixture(scope="session")
def u2():
    return make_example_u2()


@pytest.fixture(scope="session")
def u3():
    return make_example_u3()


@pytest.fixture(scope="session")
def bowl():
    return make_quadratic_bowl()


@pytest.fixture(scope="session")
def asym_well():
    return make_asymmetric_two_well()


@pytest.fixture(scope="session")
def cos_drift():
    return make_drift("cos")


@pytest.fixture(scope="session")
def zero_drift():
    return make_drift("zero")


@pytest.fixture(scope="session")
def linear_drift():
    return make_drift("linear")

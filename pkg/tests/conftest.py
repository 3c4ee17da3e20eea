import numpy as np
import pytest

from modalshape.kinematics import QuadratureSpec, SegmentGeometry, nominal_params


@pytest.fixture
def geom():
    return SegmentGeometry()


@pytest.fixture
def quad():
    return QuadratureSpec()


@pytest.fixture
def w_nom():
    return nominal_params()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)

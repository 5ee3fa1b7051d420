import numpy as np
import pytest

from volterra_imc.carleman import lift
from volterra_imc.plant_models import shift_to_deviation, van_de_vusse


@pytest.fixture(scope="session")
def vdv():
    return van_de_vusse()


@pytest.fixture(scope="session")
def vdv_bilinear(vdv):
    sys, op = vdv
    return lift(shift_to_deviation(sys, op), 2)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)

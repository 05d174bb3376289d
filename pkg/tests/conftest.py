import numpy as np
import pytest

from bcinverse.forward import response_function
from bcinverse.goursat import solve_goursat_picard
from bcinverse.grids import PotentialSample


def sample(func, length=1.0, n_points=201):
    return PotentialSample.from_function(func, length, n_points)


def sine(x):
    return np.sin(np.pi * x) + 0.5


@pytest.fixture(scope="session")
def q_one():
    return sample(lambda x: np.ones_like(x))


@pytest.fixture(scope="session")
def q_sine():
    return sample(sine)


@pytest.fixture(scope="session")
def kernel_one(q_one):
    return solve_goursat_picard(q_one, 1.0)


@pytest.fixture(scope="session")
def r_one(q_one, kernel_one):
    return response_function(q_one, 1.0, kernel=kernel_one)


@pytest.fixture(scope="session")
def r_sine(q_sine):
    return response_function(q_sine, 1.0)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

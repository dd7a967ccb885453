import math

import numpy as np
import pytest

from ccdist.services.log_service import log_service
from ccdist.services.trapezoid5 import (
    initial_guess_symmetric,
    symmetric_family_member,
    trapezoid_solver,
)

FAMILY_B = 1.2


@pytest.fixture(scope="session")
def family_member():
    return symmetric_family_member(FAMILY_B)


@pytest.fixture(scope="session")
def family_solution(family_member):
    guess = initial_guess_symmetric(family_member.masses, FAMILY_B, family_member.height)
    return trapezoid_solver.newton_solve(family_member.masses, guess)


@pytest.fixture(scope="session")
def pentagon():
    """Regular pentagon with unit circumradius, bodies counter-clockwise."""
    angles = np.pi / 2 + 2 * np.pi * np.arange(5) / 5
    return np.column_stack([np.cos(angles), np.sin(angles)])


@pytest.fixture
def random_points():
    rng = np.random.default_rng(12345)
    return rng.uniform(-1.0, 1.0, size=(5, 2))


@pytest.fixture
def equilateral():
    return np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3) / 2]])


@pytest.fixture(autouse=True)
def _clean_log_history():
    log_service.clear_history()
    yield

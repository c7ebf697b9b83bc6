import math

import numpy as np
import pytest

from bellforge.linalg_core import StateVector
from bellforge.measurement import settings_from_angles
from bellforge.optimize import random_angles


def random_state(rng: np.random.Generator, num_qubits: int) -> StateVector:
    dim = 2 ** num_qubits
    return StateVector.normalized(rng.normal(size=dim) + 1j * rng.normal(size=dim))


def random_settings(rng: np.random.Generator, num_parties: int):
    return settings_from_angles(random_angles(rng, num_parties), num_parties)


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


PI = math.pi


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)

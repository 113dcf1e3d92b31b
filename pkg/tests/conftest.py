import itertools

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from copocut.model import Mbqp

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

# acceptance lines collected by tests/test_acceptance.py
GATE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if GATE_LINES:
        terminalreporter.section("acceptance gate")
        for line in sorted(GATE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)


@pytest.fixture
def ex_problem() -> Mbqp:
    return Mbqp(Q=[[1.0, -1.0], [-1.0, 0.0]], c=[0.0, 0.0], A=[[1.0, 1.0]], b=[1.0], binary=())


def all_bit_vectors(n: int) -> np.ndarray:
    return np.array(list(itertools.product((0, 1), repeat=n)), dtype=np.float64).reshape(-1, n)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240531)

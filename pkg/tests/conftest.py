import itertools

import numpy as np
import pytest

from recmarkov.markov_core import encode_state

ACCEPTANCE_LINES = []


def record_criterion(number, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def states(N, k):
    """All order-k state tuples, in index order."""
    return list(itertools.product(range(1, N + 1), repeat=k))


def index0(N, k, state):
    return encode_state(N, k, state) - 1


def random_stochastic(rng, N, floor=0.05):
    R = rng.uniform(floor, 1.0, size=(N, N))
    return R / R.sum(axis=0)

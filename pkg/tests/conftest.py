from pathlib import Path

import numpy as np
import pytest

from iwcea.instance import MkpInstance, generate_random, vasquez_hao_example

DATA = Path(__file__).parent / "data"

# filled by the acceptance tests, echoed at the end of the session
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def vh5():
    return vasquez_hao_example()


@pytest.fixture
def data_dir():
    return DATA


def small_instance(seed, n_max=12, m_max=4):
    """Random well-stated instance with a few items, drawn from ``seed``."""
    rng = np.random.default_rng(seed)
    # tiny n with small alpha admits no item that fits b_i = alpha * row sum
    n = int(rng.integers(4, n_max + 1))
    m = int(rng.integers(1, m_max + 1))
    alpha = float(rng.uniform(0.4, 0.8))
    return generate_random(n, m, alpha, seed, profit_range=(1, 100), consumption_range=(1, 100))


def as_instance(p, r, b):
    return MkpInstance(p, r, b)

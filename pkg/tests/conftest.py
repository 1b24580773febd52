import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from qirec.qmat import random_state, random_unitary

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def rng_from(seed):
    return np.random.default_rng(seed)


def state(seed, dim=4, rank=None):
    return random_state(dim, rng_from(seed), rank)


def unitary(seed, dim=2):
    return random_unitary(dim, rng_from(seed))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed after the run
ACCEPTANCE = {}


def record_criterion(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[number])

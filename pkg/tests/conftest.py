import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

from hubobench import HuboInstance, brute_force_ground_state, random_instance  # noqa: E402

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def pair():
    """H = s0 s1."""
    return HuboInstance.from_terms(2, [((0, 1), 1.0)])


@pytest.fixture
def mixed():
    return HuboInstance.from_terms(
        4, [((0,), 0.5), ((1, 2), -1.25), ((0, 1, 3), 2.0), ((2, 3), 0.75), ((3,), -0.1)]
    )


@pytest.fixture(scope="session")
def inst18():
    return random_instance(18, seed=3, name="r18")


@pytest.fixture(scope="session")
def gs18(inst18):
    return brute_force_ground_state(inst18)


@pytest.fixture(scope="session")
def inst12():
    return random_instance(12, seed=11, name="r12")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance outcomes, printed as one PASS/FAIL line each at the end of the run
ACCEPTANCE: dict[int, tuple[str, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        status, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {status}  {detail}")

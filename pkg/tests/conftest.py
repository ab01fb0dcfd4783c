import numpy as np
import pytest
from hypothesis import settings

from cpmodules.instances import equivalent_pair_4x2, equivalent_pair_5x2

settings.register_profile("default", max_examples=25, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20260114)


@pytest.fixture(scope="session")
def pair_5x2():
    return equivalent_pair_5x2()


@pytest.fixture(scope="session")
def pair_4x2():
    return equivalent_pair_4x2()


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[number])

import numpy as np
import pytest

from floquet_aaw import IntegratorConfig, build_variational
from floquet_aaw.examples import EX42


@pytest.fixture(scope="session")
def coarse():
    """Cheaper grid for tests whose tolerances do not need N=4000."""
    return IntegratorConfig(400)


@pytest.fixture(scope="session")
def vs42():
    return build_variational(EX42)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS
    if RESULTS:
        terminalreporter.section("acceptance checks")
        for row in RESULTS:
            terminalreporter.write_line(row.line())

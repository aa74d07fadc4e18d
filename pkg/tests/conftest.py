import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from herzflow.grid import make_grid
from herzflow.dyadic import default_bank

settings.register_profile("herzflow", deadline=None, max_examples=20, derandomize=True,
                          suppress_health_check=[HealthCheck.too_slow,
                                                 HealthCheck.function_scoped_fixture])
settings.load_profile("herzflow")

# criterion number -> (passed, message); filled by test_acceptance
ACCEPTANCE = {}


@pytest.fixture(scope="session")
def g64():
    return make_grid(2, 64, 16.0)


@pytest.fixture(scope="session")
def g128():
    return make_grid(2, 128, 16.0)


@pytest.fixture(scope="session")
def g256():
    return make_grid(2, 256, 16.0)


@pytest.fixture(scope="session")
def bank128(g128):
    return default_bank(g128)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, msg = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {msg}")

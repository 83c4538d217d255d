import numpy as np
import pytest

from infospec.selftest import EXAMPLE_RHO, EXAMPLE_SIGMA

# filled by test_acceptance.py: criterion number -> (passed, summary)
ACCEPTANCE = {}


@pytest.fixture
def example_pair():
    return EXAMPLE_RHO.copy(), EXAMPLE_SIGMA.copy()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, text = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {text}")

import numpy as np
import pytest

from crossperm.sampling import RngState


@pytest.fixture
def gen():
    """Plain numpy generator for building test data."""
    return np.random.default_rng(20240601)


@pytest.fixture
def rng():
    return RngState(42)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance") or \
        __import__("sys").modules.get("tests.test_acceptance")
    lines = getattr(mod, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)

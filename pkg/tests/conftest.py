import math

import pytest

from blowfly.model import ModelParams


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running numerical experiments")


@pytest.fixture
def mp_e2():
    """delta = D = a = 1, p = e^2, r = 1."""
    return ModelParams(p=math.exp(2.0))


@pytest.fixture
def mp_e3():
    return ModelParams(p=math.exp(3.0))


ACCEPTANCE_LINES = []


def report(number, name, passed, detail):
    """Print and remember one acceptance verdict line."""
    line = f"{'PASS' if passed else 'FAIL'} criterion {number:>2} {name}: {detail}"
    print(line, flush=True)
    ACCEPTANCE_LINES.append((number, line))
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)

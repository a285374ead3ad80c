import numpy as np
import pytest

from helmscat.cli import bundled_config
from helmscat.config import load_config
from helmscat.scatmat import OperatorCache


@pytest.fixture(scope="session")
def shared_cache():
    return OperatorCache()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def bundled(name):
    return load_config(bundled_config(name))


ACCEPTANCE_LINES = []


def record_criterion(label, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

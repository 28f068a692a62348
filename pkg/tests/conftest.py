import sys

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def pytest_terminal_summary(terminalreporter):
    # re-emit the acceptance scoreboard: per-test prints are swallowed by
    # capture unless the test fails
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "_LINES", None) if module else None
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)

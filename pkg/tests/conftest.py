import numpy as np
import pytest

from robustdoa import AngleGrid, ArrayGeometry


@pytest.fixture
def ula():
    return ArrayGeometry(10)


@pytest.fixture
def grid():
    return AngleGrid.uniform(2.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240501)


@pytest.fixture
def verdict(request):
    """Record a one-line PASS/FAIL summary for an acceptance criterion."""
    lines = request.config.__dict__.setdefault("acceptance_lines", [])

    def record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append((number, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.__dict__.get("acceptance_lines")
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)

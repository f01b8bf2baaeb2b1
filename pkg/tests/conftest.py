import sys
from pathlib import Path

import pytest

from subhessian.fields import engel, euclidean, heisenberg

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def h1():
    return heisenberg(1)


@pytest.fixture
def h2():
    return heisenberg(2)


@pytest.fixture
def eng():
    return engel()


@pytest.fixture
def e3():
    return euclidean(3)


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line per acceptance criterion and assert it."""
    lines = request.config.stash.setdefault(ACCEPTANCE, [])

    def record(number, ok, detail):
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        lines.append(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)

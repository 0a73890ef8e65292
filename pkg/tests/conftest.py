import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gibbsdice import _backend  # noqa: E402

BACKENDS = [("python", _backend.pure)]
if _backend.compiled() is not None:
    BACKENDS.append(("cython", _backend.compiled()))

ACCEPTANCE_LINES = []


@pytest.fixture(params=[name for name, _ in BACKENDS])
def kernels(request, monkeypatch):
    """Run a test once per available kernel backend."""
    module = dict(BACKENDS)[request.param]
    monkeypatch.setattr(_backend, "kernels", module)
    return module


@pytest.fixture
def acceptance_report():
    def record(criterion, passed, detail):
        ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fracfde.core import make_grid, make_params  # noqa: E402
from fracfde.fraclap import assemble  # noqa: E402


@pytest.fixture(scope="session")
def params():
    return make_params(0.5, 0.25, 1)


@pytest.fixture(scope="session")
def grid():
    return make_grid(1.0, 256)


@pytest.fixture(scope="session")
def op(grid, params):
    return assemble(grid, params)


@pytest.fixture(scope="session")
def small_op(params):
    return assemble(make_grid(1.0, 64), params)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        ok, detail = results[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")

import math
import time

import pytest

FIXTURE_MESH = """\
# unit square, two triangles
dim 2
nodes 4
1 0 0
2 1 0
3 1 1
4 0 1
elements 2
1 1 2 3
2 1 3 4
"""

SQRT2 = math.sqrt(2.0)

_criteria = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.fixture
def fixture_mesh_text():
    return FIXTURE_MESH


@pytest.fixture
def fixture_mesh_path(tmp_path):
    path = tmp_path / "square.felm"
    path.write_text(FIXTURE_MESH)
    return path


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_call(item):
    marker = item.get_closest_marker("criterion")
    start = time.perf_counter()
    outcome = yield
    if marker is not None:
        elapsed = time.perf_counter() - start
        ok = outcome.excinfo is None
        _criteria.append((marker.args[0], marker.args[1], ok, elapsed))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, ok, elapsed in sorted(_criteria):
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {number}: {title} ({elapsed:.2f} s)")

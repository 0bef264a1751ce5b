import sys
from pathlib import Path

import pytest

from component_miner.graph import load_graph

FIXTURES = Path(__file__).parent / "fixtures"
HR_F_MIN = 0.6  # see fixtures/README.md

sys.path.insert(0, str(Path(__file__).parent))

_criteria: dict[int, tuple[str, str]] = {}


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def hr_graph():
    return load_graph(FIXTURES / "hr_portal.json")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    marker = getattr(report, "criterion", None)
    if marker is None:
        return
    number, title = marker
    previous = _criteria.get(number, (title, "PASS"))[1]
    outcome = "PASS" if report.outcome == "passed" and previous == "PASS" else "FAIL"
    _criteria[number] = (title, outcome)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        report.criterion = (marker.args[0], marker.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, outcome = _criteria[number]
        terminalreporter.write_line(f"criterion {number}: {outcome}  {title}")

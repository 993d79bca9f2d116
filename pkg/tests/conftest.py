import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_criteria = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    crit = dict(report.user_properties).get("criterion")
    if crit is None:
        return
    status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
    # FAIL beats PASS beats SKIP across a criterion's checks
    rank = {"SKIP": 0, "PASS": 1, "FAIL": 2}
    prev = _criteria.get(crit, "SKIP")
    _criteria[crit] = max(prev, status, key=rank.__getitem__)


@pytest.fixture(autouse=True)
def _tag_criterion(request, record_property):
    mark = request.node.get_closest_marker("acceptance")
    if mark is not None:
        record_property("criterion", mark.args[0])


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(_criteria):
        terminalreporter.write_line(f"criterion {crit:>2}: {_criteria[crit]}")

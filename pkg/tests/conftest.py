import sys
from collections import defaultdict
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_titles: dict[int, str] = {}
_outcomes: dict[int, list[bool]] = defaultdict(list)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    m = item.get_closest_marker("acceptance")
    if m is None:
        return
    number, title = m.args
    _titles[number] = title
    report = outcome.get_result()
    if report.when == "call" or report.outcome != "passed":
        _outcomes[number].append(report.outcome == "passed")


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion; a criterion passes only if all its tests do."""
    if not _titles:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_titles):
        results = _outcomes.get(number, [])
        ok = bool(results) and all(results)
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {number:2d}: {_titles[number]}")

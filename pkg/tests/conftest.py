"""Shared fixtures and the per-criterion acceptance summary."""

from __future__ import annotations

from collections import OrderedDict
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"

# criterion number -> (title, list of outcomes)
_CRITERIA: "OrderedDict[int, tuple[str, list[str]]]" = OrderedDict()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            _CRITERIA.setdefault(m.args[0], (m.args[1], []))
    ordered = OrderedDict(sorted(_CRITERIA.items()))
    _CRITERIA.clear()
    _CRITERIA.update(ordered)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is None:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _CRITERIA[m.args[0]][1].append("skipped" if report.skipped else report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number, (title, outcomes) in _CRITERIA.items():
        if not outcomes:
            status = "NOT RUN"
        elif "failed" in outcomes:
            status = "FAIL"
        elif all(o == "skipped" for o in outcomes):
            status = "SKIP"
        else:
            status = "PASS"
        terminalreporter.write_line(f"{status:7s} criterion {number}: {title} ({len(outcomes)} check(s))")


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES

import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

_criteria = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    name = item.name
    if not name.startswith("test_criterion_"):
        return
    number = int(name.split("_")[2])
    doc = (item.function.__doc__ or name).strip().splitlines()[0]
    failed = report.failed or (report.when == "call" and report.outcome != "passed")
    prev = _criteria.get(number, (doc, True))
    _criteria[number] = (doc, prev[1] and not failed)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        doc, ok = _criteria[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {doc}")

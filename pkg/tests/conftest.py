"""Acceptance reporting: one printed PASS/FAIL line per acceptance criterion.

Criterion tests live in test_acceptance.py and follow the naming scheme
test_criterion_NN_<slug>; this hook collects their outcomes and prints a
summary block after the test run so the verdicts survive output capture.
"""

import re

_CRITERION = re.compile(r"test_criterion_(\d+)_(\w+)")
_outcomes = {}


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if m is None:
        return
    key = (int(m.group(1)), m.group(2))
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _outcomes[key] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for num, name in sorted(_outcomes):
        verdict = {"passed": "PASS", "failed": "FAIL"}.get(_outcomes[(num, name)])
        verdict = verdict or _outcomes[(num, name)].upper()
        terminalreporter.write_line(f"[acceptance] criterion {num} ({name}): {verdict}")

"""Collects acceptance outcomes and prints one line per criterion at the end of the run."""

import pytest

_OUTCOMES: dict[int, tuple[str, str, float]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, label): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number, label = marker.args
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        status = "PASS" if report.passed else "FAIL"
        _OUTCOMES[number] = (status, label, report.duration)


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_OUTCOMES):
        status, label, seconds = _OUTCOMES[number]
        terminalreporter.write_line(f"criterion {number}: {status}  {label}  ({seconds:.2f} s)")

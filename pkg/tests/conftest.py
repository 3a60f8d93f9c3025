"""Acceptance reporting: one PASS/FAIL line per criterion in the terminal summary."""

import pytest

_results = {}
_notes = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by a test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    key = marker.args
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _results[key] = report.outcome


@pytest.fixture
def note(request):
    """Attach a measured value to the criterion's summary line."""
    marker = request.node.get_closest_marker("criterion")

    def add(text):
        _notes.setdefault(marker.args, []).append(text)

    return add


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for (number, title), outcome in sorted(_results.items()):
        status = "PASS" if outcome == "passed" else "FAIL"
        extra = "; ".join(_notes.get((number, title), []))
        terminalreporter.write_line(f"{status}  [{number}] {title}" + (f"  ({extra})" if extra else ""))

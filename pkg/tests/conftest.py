import re

_CRITERION_RESULTS: dict[int, tuple[str, str]] = {}

_PATTERN = re.compile(r"test_criterion_(\d+)")


def record_criterion(number: int, description: str) -> None:
    """Mark a criterion as passed (called at the end of its test)."""
    _CRITERION_RESULTS[number] = ("PASS", description)


def pytest_runtest_logreport(report):
    m = _PATTERN.search(report.nodeid)
    if m and report.when == "call" and report.failed:
        num = int(m.group(1))
        _CRITERION_RESULTS[num] = ("FAIL", report.nodeid.split("::")[-1])


def pytest_terminal_summary(terminalreporter):
    if not _CRITERION_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERION_RESULTS):
        status, desc = _CRITERION_RESULTS[num]
        terminalreporter.write_line(f"criterion {num}: {status} - {desc}")

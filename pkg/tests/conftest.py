import re

# acceptance outcomes, keyed by criterion number: (title, passed, detail)
ACCEPTANCE = {}
_DETAILS = {}


def record_detail(number, detail):
    """Attach a measured value to an acceptance criterion's summary line."""
    _DETAILS[number] = detail


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_c(\d+)_(\w+)", report.nodeid)
    if not m or report.when not in ("setup", "call"):
        return
    number, title = int(m.group(1)), m.group(2).replace("_", " ")
    if report.when == "setup" and report.passed:
        return
    ACCEPTANCE[number] = (title, report.passed, _DETAILS.get(number, ""))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, passed, detail = ACCEPTANCE[number]
        line = f"[{'PASS' if passed else 'FAIL'}] {number:2d}. {title}"
        terminalreporter.write_line(f"{line}: {detail}" if detail else line)

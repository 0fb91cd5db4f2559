import pytest
from hypothesis import settings

settings.register_profile("repro", derandomize=True, deadline=None, print_blob=True)
settings.load_profile("repro")

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and not rep.failed:
        return
    number, title = mark.args
    detail = dict(item.user_properties).get("detail", "")
    if not rep.passed and rep.when == "call":
        detail = str(rep.longrepr.reprcrash.message).splitlines()[0] if rep.longrepr else detail
    prev = _CRITERIA.get(number)
    status = "PASS" if rep.passed else "FAIL"
    if prev is None or status == "FAIL":
        _CRITERIA[number] = (title, status, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, status, detail = _CRITERIA[number]
        terminalreporter.write_line(f"[{status}] {number:2d}. {title}" + (f": {detail}" if detail else ""))

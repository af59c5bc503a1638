import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from xcir.model import load_config  # noqa: E402

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.fixture(scope="session")
def fig2():
    return load_config("fig2")


@pytest.fixture(scope="session")
def fig3():
    return load_config("fig3")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and not rep.failed:
        return
    number, title = mark.args
    entry = _CRITERIA.setdefault(number, {"title": title, "ok": True, "notes": []})
    if rep.failed:
        entry["ok"] = False
        entry["notes"].append(item.name)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        e = _CRITERIA[number]
        status = "PASS" if e["ok"] else "FAIL"
        extra = f"  (failed: {', '.join(e['notes'])})" if e["notes"] else ""
        terminalreporter.write_line(f"criterion {number}: {status}  {e['title']}{extra}")

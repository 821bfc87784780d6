from collections import OrderedDict

import pytest

_results: "OrderedDict[int, dict]" = OrderedDict()


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or report.when not in ("setup", "call"):
        return
    number, title = marker.args
    entry = _results.setdefault(number, {"title": title, "ok": True, "ran": False, "why": []})
    if report.when == "call":
        entry["ran"] = True
    if report.failed:
        entry["ok"] = False
        msg = report.longrepr.reprcrash.message if hasattr(report.longrepr, "reprcrash") else ""
        entry["why"].append(msg.splitlines()[0] if msg else item.name)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_results):
        e = _results[number]
        status = "PASS" if e["ok"] and e["ran"] else "FAIL"
        line = f"[{status}] criterion {number}: {e['title']}"
        if status == "FAIL" and e["why"]:
            line += f"  ({e['why'][0]})"
        terminalreporter.write_line(line)

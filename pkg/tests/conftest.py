import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))


def pytest_configure(config):
    config._criteria = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when != "call" and not (rep.when == "setup" and rep.failed):
        return
    n = marker.args[0]
    details = [v for k, v in item.user_properties if k == "detail"]
    state = item.config._criteria.setdefault(n, {"passed": True, "details": []})
    state["passed"] &= rep.passed
    state["details"].extend(details)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    crit = getattr(config, "_criteria", {})
    if not crit:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(crit):
        state = crit[n]
        line = "criterion %d: %s" % (n, "PASS" if state["passed"] else "FAIL")
        if state["details"]:
            line += "  (" + "; ".join(state["details"]) + ")"
        terminalreporter.write_line(line)

from __future__ import annotations

import numpy as np
import pytest

_RESULTS: dict[str, tuple[str, list]] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        name = report.nodeid.split("::")[-1]
        _RESULTS[name] = (report.outcome, list(report.user_properties))


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_RESULTS, key=lambda n: int(n.split("_")[2])):
        outcome, props = _RESULTS[name]
        verdict = "PASS" if outcome == "passed" else "FAIL"
        detail = " ".join(f"{k}={v}" for k, v in props)
        terminalreporter.write_line(f"{verdict} {name} {detail}".rstrip())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

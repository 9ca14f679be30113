import re
from pathlib import Path

import pytest

from hearth.home import load_home

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"

CRITERIA = {
    1: "validity classifier fixture suite",
    2: "stepwise pipeline removes naive false positives",
    3: "correct-targeting proportions on the mid-size home",
    4: "routine engine matches the brute-force oracle",
    5: "dataset integrity",
    6: "token trend and cost arithmetic",
    7: "plan cache replays without model calls",
    8: "case-study replay reaches the golden state",
    9: "property suites",
}


@pytest.fixture(scope="session")
def h1():
    return load_home("h1")


@pytest.fixture(scope="session")
def h2():
    return load_home("h2")


@pytest.fixture(scope="session")
def h3():
    return load_home("h3")


@pytest.fixture(scope="session")
def case_home():
    return load_home("case_study")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    outcomes = {}
    for status in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(status, []):
            nodeid = getattr(report, "nodeid", "")
            match = re.search(r"test_criterion_(\d+)", nodeid)
            if match:
                n = int(match.group(1))
                # a later failure report wins over an earlier pass
                outcomes[n] = status if outcomes.get(n) != "failed" else "failed"
    if not outcomes:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(CRITERIA):
        if n in outcomes:
            verdict = "PASS" if outcomes[n] == "passed" else "FAIL"
        else:
            verdict = "NOT RUN"
        terminalreporter.write_line(f"criterion {n}: {verdict} - {CRITERIA[n]}")

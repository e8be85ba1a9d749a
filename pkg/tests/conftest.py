from __future__ import annotations

import pytest

from ecamut.cli import shipped
from ecamut.text import parse_policy, parse_schema, parse_system_model

# The four-rule web-server excerpt, with its original spacing and mixed case.
EXCERPT = """\
when requestdensity is 'high' or 'medium'
if cacheHandler.size  == 0
then utility of addCache is 'high'

when requestdensity is 'low'
if cacheHandler.size == 0
then utility of addCache is 'low'

when LOAD is 'high'
if FileServers.size  <= 10
then utility of addFileServer is 'high'

when LOAD is 'LOW'
if FileServers.size  <= 10
then utility of addFileServer is 'low'
"""

# Same shape on a 4x4 domain with two levels per property.
SMALL_SCHEMA = """\
property LOAD : int [0,3] levels { low: [0,1], high: [2,3] }
property requestdensity : int [0,3] levels { low: [0,1], high: [2,3] }
"""

SMALL_POLICY = """\
when requestdensity is 'high'
if cacheHandler.size == 0
then utility of addCache is 'high'

when requestdensity is 'low'
if cacheHandler.size == 0
then utility of addCache is 'low'

when LOAD is 'high'
if FileServers.size <= 1
then utility of addFileServer is 'high'

when LOAD is 'low'
if FileServers.size <= 1
then utility of addFileServer is 'low'
"""


@pytest.fixture(scope="session")
def excerpt():
    return parse_policy(EXCERPT)


@pytest.fixture(scope="session")
def schema():
    return parse_schema(shipped("webserver.ctx").read_text())


@pytest.fixture(scope="session")
def sysmodel():
    return parse_system_model(shipped("webserver.sys").read_text())


@pytest.fixture(scope="session")
def webserver():
    return parse_policy(shipped("webserver.apl").read_text())


@pytest.fixture(scope="session")
def small_schema():
    return parse_schema(SMALL_SCHEMA)


@pytest.fixture(scope="session")
def small_policy():
    return parse_policy(SMALL_POLICY)


# ---------------------------------------------------------------------------
# Acceptance summary: one line per criterion after the run.
# ---------------------------------------------------------------------------

_acceptance: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call" or report.outcome != "passed":
        prev = _acceptance.get(name)
        if prev != "FAIL":
            _acceptance[name] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in sorted(_acceptance.items()):
        terminalreporter.write_line(f"{outcome}  {name}")

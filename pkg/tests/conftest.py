import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from helpers import FIXTURES
from vulnflow.builder import build_pdg


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion, after the test summary."""
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None) if module else None
    if not results:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, status, detail in results:
        line = f"{status}: {name}"
        if detail:
            line = f"{line} [{detail}]"
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def motivating_source() -> str:
    with open(os.path.join(FIXTURES, "motivating.minic"), "r", encoding="utf-8") as fh:
        return fh.read()


@pytest.fixture(scope="session")
def motivating_pdg(motivating_source):
    return build_pdg(motivating_source, graph_id="motivating")

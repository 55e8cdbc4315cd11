import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from support import run_primary


@pytest.fixture(scope="session")
def corpus200(tmp_path_factory):
    """200-sample labeled corpus generated by the primary CLI."""
    out = tmp_path_factory.mktemp("corpus200")
    proc = run_primary("corpus", "--seed", "42", "--count", "200",
                       "--out", str(out))
    assert proc.returncode == 0, proc.stderr
    return os.path.join(str(out), "dataset.jsonl")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    module = sys.modules.get("test_refscorer_acceptance")
    results = getattr(module, "RESULTS", None) if module else None
    if not results:
        return
    terminalreporter.section("secondary acceptance")
    for line in results:
        terminalreporter.write_line(line)

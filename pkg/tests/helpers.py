import os
import sys

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")
MOCK_SCORER = os.path.join(os.path.dirname(__file__), "mock_scorer.py")


def mock_command(mode: str) -> str:
    return f"{sys.executable} {MOCK_SCORER} --mode {mode}"


class OracleDetector:
    """Hand-tuned stand-in for a trained model on the 14-line fixture.

    High probability whenever both the undersized allocation (line 2)
    and the oversized copy (line 11) are present, low otherwise. That
    makes the copy's backward slice the clear winner.
    """

    def __init__(self, hi: float = 0.95, lo: float = 0.2):
        self.hi = hi
        self.lo = lo

    def score(self, pdg) -> float:
        ids = set(pdg.node_ids())
        return self.hi if {2, 11} <= ids else self.lo

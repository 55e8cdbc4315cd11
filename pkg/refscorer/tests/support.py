import os
import subprocess
import sys

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")
MOTIVATING = os.path.join(FIXTURES, "motivating.minic")


def run_primary(*argv: str, timeout: float = 120.0) -> subprocess.CompletedProcess:
    """Invoke the dependence-graph CLI as a subprocess, never as an import."""
    return subprocess.run([sys.executable, "-m", "vulnflow", *argv],
                         capture_output=True, text=True, timeout=timeout)


def run_refscorer(*argv: str, timeout: float = 120.0) -> subprocess.CompletedProcess:
    return subprocess.run([sys.executable, "-m", "refscorer", *argv],
                         capture_output=True, text=True, timeout=timeout)


def serve_command(model_path: str) -> str:
    return f"{sys.executable} -m refscorer serve {model_path}"

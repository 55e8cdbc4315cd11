"""Client for out-of-process scorers speaking newline-delimited JSON.

The scorer is a child process. One JSON object per line on its stdin,
one per line on its stdout. A handshake pins the protocol version:

  -> {"v": 1, "op": "handshake"}
  <- {"v": 1, "ok": true, "name": "<scorer name>"}

Scoring requests carry an id so replies may arrive in any order:

  -> {"op": "score", "id": 7, "graph": {...}}
  <- {"id": 7, "ok": true, "prob": 0.83}
  <- {"id": 7, "ok": false, "error": "..."}    on scorer-side failure

Every failure raises ScorerProtocolError; a reply slower than the
timeout (default 10s) counts as a failure.
"""
from __future__ import annotations

import json
import queue
import shlex
import subprocess
import threading
import time
from typing import Optional

from .graph import ProgramDependenceGraph
from .graphio import pdg_to_obj

PROTOCOL_VERSION = 1
DEFAULT_TIMEOUT = 10.0


class ScorerProtocolError(RuntimeError):
    pass


class ExternalScorer:
    """Spawns the scorer command and handshakes; close() or use as a context manager."""

    def __init__(self, command: str, timeout: float = DEFAULT_TIMEOUT):
        self.command = command
        self.timeout = timeout
        self.name: Optional[str] = None
        self._next_id = 0
        self._lines: queue.Queue = queue.Queue()
        argv = shlex.split(command)
        if not argv:
            raise ScorerProtocolError("empty scorer command")
        try:
            self._proc = subprocess.Popen(
                argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                text=True, encoding="utf-8", bufsize=1)
        except OSError as exc:
            raise ScorerProtocolError(f"cannot start scorer {argv[0]!r}: {exc}") from exc
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()
        self._handshake()

    def _pump(self) -> None:
        assert self._proc.stdout is not None
        for line in self._proc.stdout:
            self._lines.put(line)
        self._lines.put(None)  # EOF sentinel

    def _send(self, obj: dict) -> None:
        assert self._proc.stdin is not None
        try:
            self._proc.stdin.write(json.dumps(obj) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise ScorerProtocolError(f"scorer pipe closed: {exc}") from exc

    def _read_reply(self, deadline: float) -> dict:
        remaining = deadline - time.monotonic()
        if remaining <= 0:
            raise ScorerProtocolError(f"scorer timed out after {self.timeout}s")
        try:
            line = self._lines.get(timeout=remaining)
        except queue.Empty:
            raise ScorerProtocolError(f"scorer timed out after {self.timeout}s") from None
        if line is None:
            raise ScorerProtocolError("scorer terminated before replying")
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ScorerProtocolError(f"scorer wrote invalid JSON: {line!r}") from exc
        if not isinstance(obj, dict):
            raise ScorerProtocolError(f"scorer reply is not an object: {line!r}")
        return obj

    def _handshake(self) -> None:
        self._send({"v": PROTOCOL_VERSION, "op": "handshake"})
        reply = self._read_reply(time.monotonic() + self.timeout)
        if reply.get("v") != PROTOCOL_VERSION:
            raise ScorerProtocolError(
                f"scorer speaks protocol {reply.get('v')!r}, need {PROTOCOL_VERSION}")
        if reply.get("ok") is not True or not isinstance(reply.get("name"), str):
            raise ScorerProtocolError(f"bad handshake reply: {reply!r}")
        self.name = reply["name"]

    def score(self, pdg: ProgramDependenceGraph) -> float:
        self._next_id += 1
        request_id = self._next_id
        self._send({"op": "score", "id": request_id, "graph": pdg_to_obj(pdg)})
        deadline = time.monotonic() + self.timeout
        while True:
            reply = self._read_reply(deadline)
            if reply.get("id") != request_id:
                continue  # stale reply from an abandoned request
            if reply.get("ok") is not True:
                raise ScorerProtocolError(
                    f"scorer failed request {request_id}: {reply.get('error', 'unknown error')}")
            prob = reply.get("prob")
            if not isinstance(prob, (int, float)) or isinstance(prob, bool):
                raise ScorerProtocolError(f"request {request_id}: prob is not a number")
            prob = float(prob)
            if not (0.0 <= prob <= 1.0):
                raise ScorerProtocolError(f"request {request_id}: prob {prob} outside [0, 1]")
            return prob

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                if self._proc.stdin is not None:
                    self._proc.stdin.close()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=2.0)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()

    def __enter__(self) -> "ExternalScorer":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

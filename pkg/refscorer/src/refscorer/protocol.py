"""Newline-delimited JSON request loop on stdin/stdout.

  -> {"v": 1, "op": "handshake"}
  <- {"v": 1, "ok": true, "name": "refscorer"}
  -> {"op": "score", "id": 7, "graph": {...}}
  <- {"id": 7, "ok": true, "prob": 0.42}

Standard output carries nothing but one JSON object per line; every
diagnostic goes to standard error. A malformed request earns an
{"ok": false, ...} reply and the loop keeps serving.
"""
from __future__ import annotations

import json
import sys
from typing import IO, Optional

from .gcn import GnnModel, GraphFormatError, score_graph

PROTOCOL_VERSION = 1
SCORER_NAME = "refscorer"


def _reply_id(request: object) -> Optional[int]:
    if isinstance(request, dict):
        request_id = request.get("id")
        if isinstance(request_id, int) and not isinstance(request_id, bool):
            return request_id
    return None


def handle_request(model: GnnModel, line: str) -> dict:
    try:
        request = json.loads(line)
    except json.JSONDecodeError as exc:
        return {"id": None, "ok": False, "error": f"invalid JSON request: {exc}"}
    if not isinstance(request, dict):
        return {"id": None, "ok": False, "error": "request is not an object"}
    op = request.get("op")
    if op == "handshake":
        return {"v": PROTOCOL_VERSION, "ok": True, "name": SCORER_NAME}
    if op == "score":
        request_id = _reply_id(request)
        if request_id is None:
            return {"id": None, "ok": False, "error": "score request lacks an integer id"}
        try:
            prob = score_graph(model, request.get("graph"))
        except GraphFormatError as exc:
            return {"id": request_id, "ok": False, "error": str(exc)}
        return {"id": request_id, "ok": True, "prob": prob}
    return {"id": _reply_id(request), "ok": False, "error": f"unknown op {op!r}"}


def serve(model: GnnModel, stdin: Optional[IO[str]] = None,
          stdout: Optional[IO[str]] = None) -> int:
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    for line in stdin:
        if not line.strip():
            continue
        stdout.write(json.dumps(handle_request(model, line)) + "\n")
        stdout.flush()
    return 0

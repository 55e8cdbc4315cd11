"""Potential-sink extraction: statements where memory/command misuse can fire.

Four syntactic families, matched lexically on statement text:

  FC  call to a configured risky API; key variables are the argument
      identifiers (optionally restricted to configured positions)
  AU  array element access with a non-constant index
  PU  pointer use: unary-* dereference or `p ->` access
  AE  arithmetic: binary + - * << over at least one identifier, or a
      ++/-- not guarded by a comparison in the same statement

memset is deliberately absent from the default API list: it initializes
buffers and flags nearly every sample when treated as risky.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from typing import Optional

from .graph import ProgramDependenceGraph
from .lexer import CHAR, ID, NUM, STR, Token, lex

FC = "FC"
AU = "AU"
PU = "PU"
AE = "AE"

_KIND_ORDER = {FC: 0, AU: 1, PU: 2, AE: 3}
_AE_OPS = frozenset({"+", "-", "*", "<<"})
_COMPARISONS = frozenset({"<", ">", "<=", ">="})
# Tokens that can end a value; an operator after one of these is binary.
_CLOSERS = frozenset({")", "]"})
_BOUNDARIES = frozenset({
    ",", ";", "(", ")", "[", "]", "{", "}", "?", ":",
    "=", "+=", "-=", "*=", "/=", "%=", "<<=", ">>=", "&=", "|=", "^=",
    "<", ">", "<=", ">=", "==", "!=", "&&", "||", "!",
})


class SinkConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SinkPoint:
    node: int
    kind: str
    key_vars: frozenset[str]
    detail: str

    def sort_key(self) -> tuple:
        return (self.node, _KIND_ORDER[self.kind])


@dataclass(frozen=True)
class SinkConfig:
    fc_apis: dict[str, Optional[tuple[int, ...]]]
    enabled: frozenset[str]


def load_sink_config(path: Optional[str] = None) -> SinkConfig:
    """Load sink settings; None loads the packaged defaults."""
    if path is None:
        text = resources.files("vulnflow.data").joinpath("sink_config.json").read_text("utf-8")
    else:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SinkConfigError(f"sink config is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise SinkConfigError("sink config: expected object")
    raw_apis = obj.get("fc_apis", {})
    if not isinstance(raw_apis, dict):
        raise SinkConfigError("sink config: fc_apis must map name to positions")
    apis: dict[str, Optional[tuple[int, ...]]] = {}
    for name, positions in raw_apis.items():
        if positions is None:
            apis[name] = None
        elif (isinstance(positions, list)
              and all(isinstance(p, int) and not isinstance(p, bool) for p in positions)):
            apis[name] = tuple(positions)
        else:
            raise SinkConfigError(f"sink config: fc_apis[{name!r}] must be null or an int array")
    raw_enabled = obj.get("enabled", [FC, AU, PU, AE])
    if (not isinstance(raw_enabled, list)
            or not all(k in _KIND_ORDER for k in raw_enabled)):
        raise SinkConfigError("sink config: enabled must be a subset of [FC, AU, PU, AE]")
    return SinkConfig(fc_apis=apis, enabled=frozenset(raw_enabled))


def _is_value_end(tok: Optional[Token]) -> bool:
    if tok is None:
        return False
    return tok.is_identifier() or tok.kind in (NUM, STR, CHAR) or tok.text in _CLOSERS


def _matching_bracket(tokens: list[Token], start: int, open_text: str, close_text: str) -> Optional[int]:
    depth = 0
    for j in range(start, len(tokens)):
        if tokens[j].text == open_text:
            depth += 1
        elif tokens[j].text == close_text:
            depth -= 1
            if depth == 0:
                return j
    return None


def _split_args(tokens: list[Token]) -> list[list[Token]]:
    parts: list[list[Token]] = [[]]
    depth = 0
    for tok in tokens:
        if tok.text in ("(", "["):
            depth += 1
        elif tok.text in (")", "]"):
            depth -= 1
        if tok.text == "," and depth == 0:
            parts.append([])
        else:
            parts[-1].append(tok)
    return [p for p in parts if p] if len(parts) > 1 or parts[0] else []


def _arg_identifiers(tokens: list[Token]) -> list[str]:
    names = []
    for i, tok in enumerate(tokens):
        if not tok.is_identifier():
            continue
        if i + 1 < len(tokens) and tokens[i + 1].text == "(":
            continue  # nested callee
        names.append(tok.text)
    return names


def _render(tokens: list[Token]) -> str:
    return " ".join(t.text for t in tokens)


def _fc_matches(tokens: list[Token], config: SinkConfig):
    for i, tok in enumerate(tokens):
        if not (tok.is_identifier() and tok.text in config.fc_apis):
            continue
        if i + 1 >= len(tokens) or tokens[i + 1].text != "(":
            continue
        close = _matching_bracket(tokens, i + 1, "(", ")")
        if close is None:
            continue
        args = _split_args(tokens[i + 2:close])
        positions = config.fc_apis[tok.text]
        if positions is None:
            wanted = range(len(args))
        else:
            wanted = [p for p in positions if p < len(args)]
        key_vars: set[str] = set()
        for p in wanted:
            key_vars.update(_arg_identifiers(args[p]))
        yield FC, _render(tokens[i:close + 1]), frozenset(key_vars)


def _au_matches(tokens: list[Token]):
    for i, tok in enumerate(tokens):
        if not tok.is_identifier():
            continue
        if i + 1 >= len(tokens) or tokens[i + 1].text != "[":
            continue
        close = _matching_bracket(tokens, i + 1, "[", "]")
        if close is None:
            continue
        index = tokens[i + 2:close]
        index_ids = _arg_identifiers(index)
        if not index_ids:
            continue  # constant subscript carries no overflow signal
        yield AU, _render(tokens[i:close + 1]), frozenset({tok.text} | set(index_ids))


def _pu_matches(tokens: list[Token]):
    for i, tok in enumerate(tokens):
        if tok.text == "*" and not _is_value_end(tokens[i - 1] if i else None):
            if i + 1 < len(tokens) and tokens[i + 1].is_identifier():
                # Skip declarator stars: a type word somewhere left of the chain.
                j = i
                while j > 0 and tokens[j - 1].text == "*":
                    j -= 1
                prev = tokens[j - 1] if j else None
                if prev is not None and prev.kind == ID and not prev.is_identifier():
                    continue
                yield PU, _render(tokens[i:i + 2]), frozenset({tokens[i + 1].text})
        elif tok.text == "->" and i > 0 and tokens[i - 1].is_identifier():
            yield PU, _render(tokens[i - 1:i + 1]), frozenset({tokens[i - 1].text})


def _ae_matches(tokens: list[Token]):
    guarded = any(t.text in _COMPARISONS for t in tokens)
    # Increment/decrement, unless bounds-checked in the same statement.
    if not guarded:
        for i, tok in enumerate(tokens):
            if tok.text not in ("++", "--"):
                continue
            if i > 0 and tokens[i - 1].is_identifier():
                yield AE, _render(tokens[i - 1:i + 1]), frozenset({tokens[i - 1].text})
            elif i + 1 < len(tokens) and tokens[i + 1].is_identifier():
                yield AE, _render(tokens[i:i + 2]), frozenset({tokens[i + 1].text})
    # Binary arithmetic inside boundary-delimited segments.
    start = 0
    for end in range(len(tokens) + 1):
        if end < len(tokens) and tokens[end].text not in _BOUNDARIES:
            continue
        segment = tokens[start:end]
        start = end + 1
        if len(segment) < 3:
            continue
        has_op = any(
            segment[i].text in _AE_OPS
            and _is_value_end(segment[i - 1])
            and (segment[i + 1].is_identifier()
                 or segment[i + 1].kind in (NUM, STR, CHAR)
                 or segment[i + 1].text in ("(", "*", "&", "-", "~", "!"))
            for i in range(1, len(segment) - 1)
        )
        if not has_op:
            continue
        ids = _arg_identifiers(segment)
        if ids:
            yield AE, _render(segment), frozenset(ids)


def classify_statement(code: str, config: SinkConfig) -> list[SinkPoint]:
    """Sink matches for one statement, node id left as -1."""
    tokens = lex(code)
    merged: dict[str, tuple[str, set[str]]] = {}
    generators = []
    if FC in config.enabled:
        generators.append(_fc_matches(tokens, config))
    if AU in config.enabled:
        generators.append(_au_matches(tokens))
    if PU in config.enabled:
        generators.append(_pu_matches(tokens))
    if AE in config.enabled:
        generators.append(_ae_matches(tokens))
    for gen in generators:
        for kind, detail, key_vars in gen:
            if kind in merged:
                merged[kind][1].update(key_vars)
            else:
                merged[kind] = (detail, set(key_vars))
    out = [SinkPoint(node=-1, kind=kind, key_vars=frozenset(vars_), detail=detail)
           for kind, (detail, vars_) in merged.items()]
    return sorted(out, key=SinkPoint.sort_key)


def key_variables(code: str, kind: str, config: SinkConfig) -> frozenset[str]:
    """Key variables a statement contributes for one sink kind."""
    for point in classify_statement(code, config):
        if point.kind == kind:
            return point.key_vars
    return frozenset()


def extract_sink_nodes(pdg: ProgramDependenceGraph, config: SinkConfig) -> list[SinkPoint]:
    """All sink points of a graph, ordered by (node id, kind)."""
    points: list[SinkPoint] = []
    for node in sorted(pdg.nodes, key=lambda n: n.id):
        for match in classify_statement(node.code, config):
            points.append(SinkPoint(node=node.id, kind=match.kind,
                                    key_vars=match.key_vars, detail=match.detail))
    return points

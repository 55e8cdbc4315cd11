"""Parser for a one-statement-per-line C subset.

Grammar, by line: declarations, assignments (scalar, array element,
pointer deref, compound ops, ++/--), bare calls, if/while/for headers,
return, and block delimiters. Header bodies must be brace-delimited,
either a trailing `{` or a `{` on the next line. Def/use sets are
extracted lexically from the token stream; there is no expression tree.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Union

from .lexer import ID, OP, TYPE_WORDS, LexError, Token, lex, strip_comments

DECL = "decl"
ASSIGN = "assign"
CALL = "call"
IF_HEADER = "if-header"
WHILE_HEADER = "while-header"
FOR_HEADER = "for-header"
RETURN = "return"
BLOCK_DELIM = "block-delim"

# Library calls that write through an argument; positions are 0-based.
# Unknown callees never define anything.
DEFAULT_OUT_PARAMS: dict[str, tuple[int, ...]] = {
    "strcpy": (0,),
    "strncpy": (0,),
    "memcpy": (0,),
    "memmove": (0,),
    "memset": (0,),
    "sprintf": (0,),
    "fgets": (0,),
    "recv": (0,),
    "read": (0,),
}

_ASSIGN_OPS = frozenset({"=", "+=", "-=", "*=", "/=", "%=", "<<=", ">>=", "&=", "|=", "^="})
_COMPOUND_OPS = _ASSIGN_OPS - {"="}

_FUNC_HEADER_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_ \t\*]*\([^)]*\)\s*\{?$")


class ParseError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class MiniCStatement:
    line: int
    kind: str
    code: str
    defs: frozenset[str]
    strong_defs: frozenset[str]  # defs that kill earlier definitions
    uses: frozenset[str]
    calls: tuple[str, ...]


@dataclass(frozen=True)
class IfConstruct:
    header: int
    then: tuple["Item", ...]
    orelse: Optional[tuple["Item", ...]]


@dataclass(frozen=True)
class LoopConstruct:
    header: int
    body: tuple["Item", ...]


Item = Union[int, IfConstruct, LoopConstruct]


@dataclass(frozen=True)
class Program:
    statements: tuple[MiniCStatement, ...]
    body: tuple[Item, ...]

    def statement(self, line: int) -> MiniCStatement:
        for s in self.statements:
            if s.line == line:
                return s
        raise KeyError(line)


@dataclass(frozen=True)
class _DefUse:
    defs: frozenset[str]
    strong: frozenset[str]
    uses: frozenset[str]
    calls: tuple[str, ...]


_EMPTY = _DefUse(frozenset(), frozenset(), frozenset(), ())


def _identifiers(tokens: list[Token], out_calls: Optional[list[str]] = None) -> list[str]:
    """Variable-like names in token order; callee names are recorded, not used."""
    names = []
    for i, tok in enumerate(tokens):
        if not tok.is_identifier():
            continue
        if i + 1 < len(tokens) and tokens[i + 1].text == "(":
            if out_calls is not None:
                out_calls.append(tok.text)
            continue
        names.append(tok.text)
    return names


def _split_top_level(tokens: list[Token], sep: str) -> list[list[Token]]:
    parts: list[list[Token]] = [[]]
    depth = 0
    for tok in tokens:
        if tok.text in ("(", "["):
            depth += 1
        elif tok.text in (")", "]"):
            depth -= 1
        if tok.text == sep and depth == 0:
            parts.append([])
        else:
            parts[-1].append(tok)
    return parts


def _out_param_defs(tokens: list[Token], out_params: dict[str, tuple[int, ...]]) -> set[str]:
    """Variables written through call arguments, per the write-effect table."""
    defs: set[str] = set()
    for i, tok in enumerate(tokens):
        if not (tok.is_identifier() and tok.text in out_params):
            continue
        if i + 1 >= len(tokens) or tokens[i + 1].text != "(":
            continue
        depth = 0
        close = None
        for j in range(i + 1, len(tokens)):
            if tokens[j].text == "(":
                depth += 1
            elif tokens[j].text == ")":
                depth -= 1
                if depth == 0:
                    close = j
                    break
        if close is None:
            continue
        args = _split_top_level(tokens[i + 2:close], ",")
        for pos in out_params[tok.text]:
            if pos < len(args):
                names = _identifiers(args[pos])
                if names:
                    defs.add(names[0])  # base variable of the argument expression
    return defs


def _match_paren_span(tokens: list[Token], line: int) -> tuple[list[Token], int]:
    """Tokens inside the first (...) group and the index just past it."""
    try:
        start = next(i for i, t in enumerate(tokens) if t.text == "(")
    except StopIteration:
        raise ParseError(line, "expected '('") from None
    depth = 0
    for j in range(start, len(tokens)):
        if tokens[j].text == "(":
            depth += 1
        elif tokens[j].text == ")":
            depth -= 1
            if depth == 0:
                return tokens[start + 1:j], j + 1
    raise ParseError(line, "unbalanced parentheses")


def _require_semicolon(tokens: list[Token], line: int) -> list[Token]:
    if not tokens or tokens[-1].text != ";":
        raise ParseError(line, "expected ';' at end of statement")
    return tokens[:-1]


def _find_assign_op(tokens: list[Token]) -> Optional[int]:
    depth = 0
    for i, tok in enumerate(tokens):
        if tok.text in ("(", "["):
            depth += 1
        elif tok.text in (")", "]"):
            depth -= 1
        elif depth == 0 and tok.kind == OP and tok.text in _ASSIGN_OPS:
            return i
    return None


def _parse_decl(tokens: list[Token], line: int, out_params) -> _DefUse:
    i = 0
    while i < len(tokens) and (tokens[i].text in TYPE_WORDS or tokens[i].text == "*"):
        if tokens[i].text == "struct":
            i += 1  # skip the tag too
        i += 1
    if i >= len(tokens) or tokens[i].kind != ID or not tokens[i].is_identifier():
        raise ParseError(line, "expected declared name after type")
    name = tokens[i].text
    rest = tokens[i + 1:]
    calls: list[str] = []
    uses = frozenset(_identifiers(rest, calls))
    defs = frozenset({name} | _out_param_defs(rest, out_params))
    return _DefUse(defs, defs, uses, tuple(calls))


def _parse_assign(tokens: list[Token], line: int, out_params) -> _DefUse:
    texts = [t.text for t in tokens]
    # ++/-- statements read and strongly rewrite their operand.
    if len(tokens) == 2 and texts[1] in ("++", "--") and tokens[0].is_identifier():
        name = frozenset({texts[0]})
        return _DefUse(name, name, name, ())
    if len(tokens) == 2 and texts[0] in ("++", "--") and tokens[1].is_identifier():
        name = frozenset({texts[1]})
        return _DefUse(name, name, name, ())
    at = _find_assign_op(tokens)
    if at is None:
        raise ParseError(line, "expected assignment operator")
    lhs, op, rhs = tokens[:at], tokens[at].text, tokens[at + 1:]
    calls: list[str] = []
    uses = set(_identifiers(rhs, calls))
    out_defs = _out_param_defs(rhs, out_params)
    stars = 0
    while stars < len(lhs) and lhs[stars].text == "*":
        stars += 1
    core = lhs[stars:]
    if not core or not core[0].is_identifier():
        raise ParseError(line, "expected variable on left of assignment")
    name = core[0].text
    trailer = core[1:]
    strong = False
    if stars > 0:
        if trailer:
            raise ParseError(line, "unsupported pointer target form")
        uses.add(name)  # the pointer is read to locate the write
    elif not trailer:
        strong = True  # plain scalar store replaces the whole value
    elif trailer[0].text == "[":
        if trailer[-1].text != "]":
            raise ParseError(line, "unbalanced subscript on left of assignment")
        uses.add(name)
        uses.update(_identifiers(trailer[1:-1], calls))
    elif trailer[0].text == "->":
        uses.add(name)
    else:
        raise ParseError(line, f"unsupported assignment target near {trailer[0].text!r}")
    if op in _COMPOUND_OPS:
        uses.add(name)
    defs = frozenset({name} | out_defs)
    strong_defs = defs if strong else frozenset(out_defs)
    return _DefUse(defs, strong_defs, frozenset(uses), tuple(calls))


def _parse_call(tokens: list[Token], line: int, out_params) -> _DefUse:
    calls: list[str] = []
    uses = frozenset(_identifiers(tokens, calls))
    defs = frozenset(_out_param_defs(tokens, out_params))
    return _DefUse(defs, defs, uses, tuple(calls))


def _parse_cond(tokens: list[Token], out_params) -> _DefUse:
    calls: list[str] = []
    uses = frozenset(_identifiers(tokens, calls))
    defs = frozenset(_out_param_defs(tokens, out_params))
    return _DefUse(defs, defs, uses, tuple(calls))


def _parse_for_interior(tokens: list[Token], line: int, out_params) -> _DefUse:
    parts = _split_top_level(tokens, ";")
    if len(parts) != 3:
        raise ParseError(line, "expected 'for (init; cond; step)'")
    init, cond, step = parts
    defs: set[str] = set()
    strong: set[str] = set()
    uses: set[str] = set()
    calls: list[str] = []
    for clause in (init, step):
        if not clause:
            continue
        if clause[0].text in TYPE_WORDS:
            du = _parse_decl(clause, line, out_params)
        else:
            du = _parse_assign(clause, line, out_params)
        defs |= du.defs
        strong |= du.strong
        uses |= du.uses
        calls.extend(du.calls)
    uses.update(_identifiers(cond, calls))
    return _DefUse(frozenset(defs), frozenset(strong), frozenset(uses), tuple(calls))


# Roles a line can play in the block structure.
_OPEN, _CLOSE, _CLOSE_ELSE, _ELSE, _FUNC = "open", "close", "close-else", "else", "func"


@dataclass(frozen=True)
class _Line:
    role: str                       # a statement kind or a structural role
    du: _DefUse
    opens: bool


def _classify(code: str, line: int, out_params) -> _Line:
    if code == "{":
        return _Line(_OPEN, _EMPTY, True)
    if code == "}":
        return _Line(_CLOSE, _EMPTY, False)
    if re.fullmatch(r"\}\s*else\s*\{", code):
        return _Line(_CLOSE_ELSE, _EMPTY, True)
    m = re.fullmatch(r"else(\s*\{)?", code)
    if m:
        return _Line(_ELSE, _EMPTY, bool(m.group(1)))
    opens = code.endswith("{")
    body = code[:-1].rstrip() if opens else code
    tokens = lex(body)
    if not tokens:
        raise ParseError(line, "empty statement")
    head = tokens[0].text
    if head == "if":
        cond, after = _match_paren_span(tokens, line)
        if after != len(tokens):
            raise ParseError(line, "unexpected tokens after if condition")
        return _Line(IF_HEADER, _parse_cond(cond, out_params), opens)
    if head == "while":
        cond, after = _match_paren_span(tokens, line)
        if after != len(tokens):
            raise ParseError(line, "unexpected tokens after while condition")
        return _Line(WHILE_HEADER, _parse_cond(cond, out_params), opens)
    if head == "for":
        interior, after = _match_paren_span(tokens, line)
        if after != len(tokens):
            raise ParseError(line, "unexpected tokens after for clauses")
        return _Line(FOR_HEADER, _parse_for_interior(interior, line, out_params), opens)
    if _FUNC_HEADER_RE.match(code):
        return _Line(_FUNC, _EMPTY, opens)
    if opens:
        raise ParseError(line, "unexpected '{' after statement")
    if head == "return":
        rest = _require_semicolon(tokens, line)[1:]
        return _Line(RETURN, _parse_cond(rest, out_params), False)
    inner = _require_semicolon(tokens, line)
    if not inner:
        raise ParseError(line, "empty statement")
    if head in TYPE_WORDS:
        return _Line(DECL, _parse_decl(inner, line, out_params), False)
    if (len(inner) >= 3 and inner[0].is_identifier() and inner[1].text == "("
            and inner[-1].text == ")" and _find_assign_op(inner) is None):
        return _Line(CALL, _parse_call(inner, line, out_params), False)
    return _Line(ASSIGN, _parse_assign(inner, line, out_params), False)


@dataclass
class _Frame:
    kind: str  # "root" | "anon" | "then" | "else" | "loop"
    header: int
    items: list


def parse_minic(source: str, out_params: Optional[dict[str, tuple[int, ...]]] = None) -> Program:
    """Parse full source text; raises ParseError naming the offending line."""
    if out_params is None:
        out_params = DEFAULT_OUT_PARAMS
    statements: list[MiniCStatement] = []
    stack = [_Frame("root", 0, [])]
    expect_open: Optional[_Frame] = None      # header seen, brace still owed
    last_if: Optional[IfConstruct] = None     # candidate for an else branch
    last_line = 0

    def close_top(line: int) -> None:
        nonlocal last_if
        if len(stack) == 1:
            raise ParseError(line, "unmatched '}'")
        frame = stack.pop()
        if frame.kind == "anon":
            stack[-1].items.extend(frame.items)
            last_if = None
        elif frame.kind == "then":
            construct = IfConstruct(frame.header, tuple(frame.items), None)
            stack[-1].items.append(construct)
            last_if = construct
        elif frame.kind == "else":
            prev = stack[-1].items[-1]
            stack[-1].items[-1] = IfConstruct(prev.header, prev.then, tuple(frame.items))
            last_if = None
        else:
            stack[-1].items.append(LoopConstruct(frame.header, tuple(frame.items)))
            last_if = None

    def open_else(line: int) -> _Frame:
        nonlocal last_if
        if last_if is None or not stack[-1].items or stack[-1].items[-1] is not last_if:
            raise ParseError(line, "'else' without matching if")
        frame = _Frame("else", last_if.header, [])
        last_if = None
        return frame

    for lineno, raw in enumerate(source.splitlines(), start=1):
        last_line = lineno
        try:
            code = strip_comments(raw).strip()
        except LexError as exc:
            raise ParseError(lineno, str(exc)) from exc
        if not code:
            continue
        try:
            parsed = _classify(code, lineno, out_params)
        except LexError as exc:
            raise ParseError(lineno, str(exc)) from exc
        structural = parsed.role in (_OPEN, _CLOSE, _CLOSE_ELSE, _ELSE, _FUNC)
        kind = BLOCK_DELIM if structural else parsed.role
        statements.append(MiniCStatement(lineno, kind, code, parsed.du.defs,
                                         parsed.du.strong, parsed.du.uses, parsed.du.calls))
        if structural:
            if parsed.role == _OPEN:
                if expect_open is not None:
                    stack.append(expect_open)
                    expect_open = None
                else:
                    stack.append(_Frame("anon", lineno, []))
                last_if = None
            elif parsed.role == _CLOSE:
                if expect_open is not None:
                    raise ParseError(lineno, "expected '{' to open block")
                close_top(lineno)
            elif parsed.role == _CLOSE_ELSE:
                close_top(lineno)
                stack.append(open_else(lineno))
            elif parsed.role == _ELSE:
                frame = open_else(lineno)
                if parsed.opens:
                    stack.append(frame)
                else:
                    expect_open = frame
            else:  # _FUNC: scoping only, no graph node
                if expect_open is not None:
                    raise ParseError(lineno, "expected '{' to open block")
                if parsed.opens:
                    stack.append(_Frame("anon", lineno, []))
            continue
        if expect_open is not None:
            raise ParseError(lineno, "expected '{' to open block")
        last_if = None
        if parsed.role == IF_HEADER:
            frame = _Frame("then", lineno, [])
            if parsed.opens:
                stack.append(frame)
            else:
                expect_open = frame
        elif parsed.role in (WHILE_HEADER, FOR_HEADER):
            frame = _Frame("loop", lineno, [])
            if parsed.opens:
                stack.append(frame)
            else:
                expect_open = frame
        else:
            stack[-1].items.append(lineno)
    if expect_open is not None:
        raise ParseError(last_line, "expected '{' to open block")
    if len(stack) != 1:
        raise ParseError(last_line, "unclosed block at end of input")
    return Program(statements=tuple(statements), body=tuple(stack[0].items))

"""Tokenizer for C-like statement text.

Single source of truth for how statement code is split into tokens: the
parser's def/use extraction, risky-operation matching, and the bag-of-tokens
vectorizer all consume this stream, so they can never disagree on token
boundaries.
"""
from __future__ import annotations

from dataclasses import dataclass

ID = "id"
NUM = "num"
STR = "str"
CHAR = "char"
OP = "op"

# Longest match first; every multi-char operator must appear before its prefix.
_OPERATORS = (
    "<<=", ">>=",
    "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=",
    "+", "-", "*", "/", "%", "<", ">", "=", "!", "&", "|", "^", "~",
    "(", ")", "[", "]", "{", "}", ",", ";", ".", "?", ":",
)

KEYWORDS = frozenset({
    "if", "else", "while", "for", "return", "sizeof", "break", "continue",
    "NULL",
})

TYPE_WORDS = frozenset({
    "void", "char", "short", "int", "long", "float", "double",
    "signed", "unsigned", "const", "static", "struct", "size_t",
})


class LexError(ValueError):
    """Raised on input the tokenizer cannot split; carries the byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    offset: int

    def is_identifier(self) -> bool:
        return self.kind == ID and self.text not in KEYWORDS and self.text not in TYPE_WORDS


def strip_comments(code: str) -> str:
    """Blank out // line comments and single-line /* */ comments."""
    out = []
    i, n = 0, len(code)
    while i < n:
        ch = code[i]
        if ch in "\"'":
            j = _scan_quoted(code, i)
            out.append(code[i:j])
            i = j
        elif code.startswith("//", i):
            break
        elif code.startswith("/*", i):
            end = code.find("*/", i + 2)
            if end < 0:
                raise LexError("unterminated comment", i)
            i = end + 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def _scan_quoted(code: str, start: int) -> int:
    quote = code[start]
    i = start + 1
    while i < len(code):
        if code[i] == "\\":
            i += 2
        elif code[i] == quote:
            return i + 1
        else:
            i += 1
    raise LexError("unterminated literal", start)


def lex(code: str) -> list[Token]:
    """Split one statement's text into tokens.

    Identifiers keep keywords/type words as kind `id`; callers use
    Token.is_identifier() when they want variable-like names only.
    Raises LexError with the byte offset on anything unrecognizable.
    """
    code = strip_comments(code)
    tokens: list[Token] = []
    i, n = 0, len(code)
    while i < n:
        ch = code[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isalpha() or ch == "_":
            j = i + 1
            while j < n and (code[j].isalnum() or code[j] == "_"):
                j += 1
            tokens.append(Token(ID, code[i:j], i))
            i = j
            continue
        if ch.isdigit():
            j = i + 1
            while j < n and (code[j].isalnum() or code[j] in "._xX"):
                j += 1
            tokens.append(Token(NUM, code[i:j], i))
            i = j
            continue
        if ch == '"':
            j = _scan_quoted(code, i)
            tokens.append(Token(STR, code[i:j], i))
            i = j
            continue
        if ch == "'":
            j = _scan_quoted(code, i)
            tokens.append(Token(CHAR, code[i:j], i))
            i = j
            continue
        for op in _OPERATORS:
            if code.startswith(op, i):
                tokens.append(Token(OP, op, i))
                i += len(op)
                break
        else:
            raise LexError(f"unexpected character {ch!r}", i)
    return tokens


def token_texts(code: str) -> list[str]:
    return [t.text for t in lex(code)]

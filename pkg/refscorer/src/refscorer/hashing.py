"""Hashed bag-of-tokens node embedder.

Each statement's code is tokenized, every token is FNV-1a hashed into
one of `dim` buckets, and the bucket counts are L2-normalized per node.
No vocabulary to ship: two runs on the same code agree exactly.
"""
from __future__ import annotations

import re

import numpy as np

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK = (1 << 64) - 1

# Longest alternatives first so "<<=" wins over "<<" and "<".
_TOKEN_RE = re.compile(r"""
    "(?:\\.|[^"\\])*"            # string literal
  | '(?:\\.|[^'\\])*'            # char literal
  | [A-Za-z_][A-Za-z0-9_]*       # identifier / keyword
  | 0[xX][0-9a-fA-F]+[uUlL]*     # hex number
  | [0-9]+[uUlL]*                # decimal number
  | <<=|>>=|<<|>>|->|\+\+|--
  | [+\-*/%<>=!&|^]=
  | ==|!=|&&|\|\|
  | [+\-*/%<>=!&|^~;,(){}\[\]?:.]
""", re.VERBOSE)


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * FNV_PRIME) & _MASK
    return h


def tokenize(code: str) -> list[str]:
    return _TOKEN_RE.findall(code)


def node_features(codes: list[str], dim: int) -> np.ndarray:
    """One row per statement: hashed token counts, L2-normalized.

    Rows with no tokens stay zero instead of dividing by zero.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    features = np.zeros((len(codes), dim), dtype=np.float64)
    for row, code in enumerate(codes):
        for tok in tokenize(code):
            features[row, fnv1a64(tok.encode("utf-8")) % dim] += 1.0
    norms = np.linalg.norm(features, axis=1, keepdims=True)
    np.divide(features, norms, out=features, where=norms > 0.0)
    return features

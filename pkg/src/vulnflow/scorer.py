"""Graph scoring and path selection.

A detector maps a graph to a vulnerability probability. For each
candidate path g of graph G, importance(p_G, p_g) = 1 - (p_G - p_g)
measures how much of the detector's verdict the path preserves; the
explanation is the path with the highest importance. Paths over- as
well as under-shooting the graph score are handled: scores live in
[0, 1] so importance lives in [0, 2].

The built-in detector is logistic regression over hashed token counts:
statement text is tokenized, each token FNV-1a-hashed into a fixed-size
count vector, and the vector L2-normalized.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, Protocol, Sequence

import numpy as np

from .graph import (
    FlowPath,
    LabeledSample,
    ProgramDependenceGraph,
    induced_subgraph,
    path_lines,
)
from .lexer import token_texts

DIM_DEFAULT = 1024

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


class Detector(Protocol):
    def score(self, pdg: ProgramDependenceGraph) -> float: ...


def fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return h


def token_counts(pdg: ProgramDependenceGraph) -> dict[str, int]:
    counts: dict[str, int] = {}
    for node in pdg.nodes:
        for tok in token_texts(node.code):
            counts[tok] = counts.get(tok, 0) + 1
    return counts


def vectorize(pdg: ProgramDependenceGraph, dim: int = DIM_DEFAULT) -> np.ndarray:
    """Hashed token-count vector, L2-normalized; zero vector stays zero."""
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    vec = np.zeros(dim, dtype=np.float64)
    for tok, count in token_counts(pdg).items():
        vec[fnv1a64(tok.encode("utf-8")) % dim] += count
    norm = float(np.linalg.norm(vec))
    return vec / norm if norm > 0.0 else vec


def _sigmoid(z: float) -> float:
    z = max(-60.0, min(60.0, z))
    return 1.0 / (1.0 + math.exp(-z))


@dataclass
class BaselineModel:
    """Logistic regression over hashed token vectors."""

    weights: np.ndarray
    bias: float
    dim: int
    metadata: Optional[dict] = None

    def score(self, pdg: ProgramDependenceGraph) -> float:
        z = float(self.weights @ vectorize(pdg, self.dim)) + self.bias
        return _sigmoid(z)

    def save(self, path: str) -> None:
        obj = {"D": self.dim, "w": [float(x) for x in self.weights], "b": float(self.bias)}
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(obj, fh)
            fh.write("\n")

    @classmethod
    def load(cls, path: str) -> "BaselineModel":
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
        for key in ("D", "w", "b"):
            if key not in obj:
                raise ValueError(f"model file missing {key!r}")
        dim = obj["D"]
        weights = np.asarray(obj["w"], dtype=np.float64)
        if not isinstance(dim, int) or weights.shape != (dim,):
            raise ValueError("model file: w length does not match D")
        return cls(weights=weights, bias=float(obj["b"]), dim=dim)


def bce_loss_and_grad(weights: np.ndarray, bias: float, features: np.ndarray,
                      labels: np.ndarray) -> tuple[float, np.ndarray, float]:
    """Mean binary cross-entropy of the logistic model and its gradient.

    Uses log(1 + e^z) - y*z computed via log1p of a non-positive
    exponent, so it stays exact (no clipping) for any magnitude of z.
    """
    z = features @ weights + bias
    loss = float(np.mean(np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z))) - labels * z))
    p = np.where(z >= 0, 1.0 / (1.0 + np.exp(-np.clip(z, 0.0, None))),
                 np.exp(np.clip(z, None, 0.0)) / (1.0 + np.exp(np.clip(z, None, 0.0))))
    residual = (p - labels) / len(labels)
    return loss, features.T @ residual, float(residual.sum())


def train_baseline(samples: Sequence[LabeledSample], *, lr: float = 5.0,
                   epochs: int = 800, seed: int = 0,
                   dim: int = DIM_DEFAULT) -> BaselineModel:
    """Full-batch gradient descent on mean binary cross-entropy.

    Weights start at zero, so the run is deterministic; `seed` is kept
    in the metadata for provenance of shuffling-free training.
    """
    if not samples:
        raise ValueError("cannot train on an empty dataset")
    labels = {s.label for s in samples}
    if labels != {0, 1}:
        raise ValueError("training needs both a vulnerable and a safe sample")
    x = np.stack([vectorize(s.pdg, dim) for s in samples])
    y = np.array([s.label for s in samples], dtype=np.float64)
    w = np.zeros(dim, dtype=np.float64)
    b = 0.0
    loss = math.inf
    for _ in range(epochs):
        loss, grad_w, grad_b = bce_loss_and_grad(w, b, x, y)
        w = w - lr * grad_w
        b = b - lr * grad_b
    loss, _, _ = bce_loss_and_grad(w, b, x, y)
    return BaselineModel(weights=w, bias=b, dim=dim,
                         metadata={"seed": seed, "epochs": epochs, "lr": lr,
                                   "final_loss": loss, "n_samples": len(samples)})


def score(detector: Detector, pdg: ProgramDependenceGraph) -> float:
    """Detector probability, range-checked."""
    value = float(detector.score(pdg))
    if math.isnan(value) or not (0.0 <= value <= 1.0):
        raise ValueError(f"detector score {value!r} outside [0, 1]")
    return value


def importance(p_graph: float, p_path: float) -> float:
    """How much of the graph verdict the path keeps: 1 - (p_G - p_g)."""
    for name, value in (("p_graph", p_graph), ("p_path", p_path)):
        if math.isnan(value) or not (0.0 <= value <= 1.0):
            raise ValueError(f"{name} {value!r} outside [0, 1]")
    return 1.0 - (p_graph - p_path)


@dataclass(frozen=True)
class PathScore:
    path: FlowPath
    p_path: float
    importance: float


@dataclass(frozen=True)
class Explanation:
    p_graph: float
    selected: PathScore
    records: tuple[PathScore, ...]


def select_path(pdg: ProgramDependenceGraph, paths: Sequence[FlowPath],
                detector: Detector) -> Explanation:
    """Score every candidate path and pick the most important one.

    Ties break to the shorter path, then to the lexicographically
    smaller line-ordered node id sequence. Identical node sets share
    one detector call: the induced subgraph is the same.
    """
    if not paths:
        raise ValueError("no candidate paths to select from")
    p_graph = score(detector, pdg)
    cache: dict[frozenset[int], float] = {}
    records: list[PathScore] = []
    for path in paths:
        key = frozenset(path.nodes)
        if key not in cache:
            cache[key] = score(detector, induced_subgraph(pdg, key))
        p_path = cache[key]
        records.append(PathScore(path=path, p_path=p_path,
                                 importance=importance(p_graph, p_path)))

    def rank(record: PathScore) -> tuple:
        ordered = tuple(sorted(record.path.nodes,
                               key=lambda nid: (pdg.line_of(nid), nid)))
        return (-record.importance, len(record.path.nodes), ordered)

    selected = min(records, key=rank)
    return Explanation(p_graph=p_graph, selected=selected, records=tuple(records))


def explanation_lines(explanation: Explanation,
                      pdg: ProgramDependenceGraph) -> list[int]:
    return path_lines(explanation.selected.path, pdg)

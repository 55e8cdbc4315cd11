"""Two-layer mean-aggregation graph convolution with a logistic head.

Forward pass per graph, nodes in ascending-id order so any permutation
of the input JSON produces bit-identical scores:

    X  = hashed node features (n x dim, rows L2-normalized)
    M  = D^-1 (A + I)    mean over undirected neighbors plus self
    H1 = relu(M X W1 + b1)
    H2 = relu(M H1 W2 + b2)
    g  = column mean of H2
    p  = sigmoid(g . w + b)

Training is full-batch Adam on binary cross-entropy with hand-written
backpropagation; per-graph (X, M) pairs are computed once and reused
every epoch.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .hashing import node_features

DIM_DEFAULT = 64
HIDDEN_DEFAULT = 32
EMBEDDERS = ("hash",)


class GraphFormatError(ValueError):
    pass


class TrainingError(ValueError):
    pass


@dataclass
class GnnModel:
    dim: int
    hidden: int
    W1: np.ndarray  # dim x hidden
    b1: np.ndarray  # hidden
    W2: np.ndarray  # hidden x hidden
    b2: np.ndarray  # hidden
    w: np.ndarray   # hidden
    b: float
    embedder: str = "hash"

    def save(self, path: str) -> None:
        obj = {
            "dim": self.dim, "hidden": self.hidden, "embedder": self.embedder,
            "W1": self.W1.tolist(), "b1": self.b1.tolist(),
            "W2": self.W2.tolist(), "b2": self.b2.tolist(),
            "w": self.w.tolist(), "b": self.b,
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(obj, fh)
            fh.write("\n")

    @classmethod
    def load(cls, path: str) -> "GnnModel":
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
        try:
            model = cls(dim=int(obj["dim"]), hidden=int(obj["hidden"]),
                        W1=np.asarray(obj["W1"], dtype=np.float64),
                        b1=np.asarray(obj["b1"], dtype=np.float64),
                        W2=np.asarray(obj["W2"], dtype=np.float64),
                        b2=np.asarray(obj["b2"], dtype=np.float64),
                        w=np.asarray(obj["w"], dtype=np.float64),
                        b=float(obj["b"]),
                        embedder=str(obj.get("embedder", "hash")))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"bad model file {path}: {exc}") from exc
        if model.embedder not in EMBEDDERS:
            raise ValueError(f"bad model file {path}: unknown embedder {model.embedder!r}")
        if model.W1.shape != (model.dim, model.hidden) \
                or model.b1.shape != (model.hidden,) \
                or model.W2.shape != (model.hidden, model.hidden) \
                or model.b2.shape != (model.hidden,) \
                or model.w.shape != (model.hidden,):
            raise ValueError(f"bad model file {path}: weight shapes do not match dims")
        return model


def init_model(dim: int = DIM_DEFAULT, hidden: int = HIDDEN_DEFAULT,
               seed: int = 0) -> GnnModel:
    """He-scaled Gaussian weights, zero biases, seeded for reproducibility."""
    rng = np.random.default_rng(seed)
    return GnnModel(
        dim=dim, hidden=hidden,
        W1=rng.normal(0.0, math.sqrt(2.0 / dim), (dim, hidden)),
        b1=np.zeros(hidden),
        W2=rng.normal(0.0, math.sqrt(2.0 / hidden), (hidden, hidden)),
        b2=np.zeros(hidden),
        w=rng.normal(0.0, math.sqrt(2.0 / hidden), hidden),
        b=0.0)


def graph_matrices(graph: object, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Validate a graph JSON object and return (features, aggregation).

    Nodes are sorted by id before matrices are built, which makes the
    score independent of the order nodes and edges arrive in.
    """
    if not isinstance(graph, dict):
        raise GraphFormatError("graph is not an object")
    nodes = graph.get("nodes")
    edges = graph.get("edges", [])
    if not isinstance(nodes, list) or not nodes:
        raise GraphFormatError("graph has no nodes")
    if not isinstance(edges, list):
        raise GraphFormatError("edges is not a list")
    ids: list[int] = []
    codes: dict[int, str] = {}
    for node in nodes:
        if not isinstance(node, dict) or isinstance(node.get("id"), bool) \
                or not isinstance(node.get("id"), int) \
                or not isinstance(node.get("code"), str):
            raise GraphFormatError(f"bad node record: {node!r}")
        if node["id"] in codes:
            raise GraphFormatError(f"duplicate node id {node['id']}")
        ids.append(node["id"])
        codes[node["id"]] = node["code"]
    ids.sort()
    index = {node_id: i for i, node_id in enumerate(ids)}
    n = len(ids)
    adjacency = np.eye(n, dtype=np.float64)
    for edge in edges:
        if not isinstance(edge, dict):
            raise GraphFormatError(f"bad edge record: {edge!r}")
        src, dst = edge.get("src"), edge.get("dst")
        if src not in index or dst not in index:
            raise GraphFormatError(f"edge endpoint not a node id: {edge!r}")
        # Undirected, binary: parallel control/data edges count once.
        adjacency[index[src], index[dst]] = 1.0
        adjacency[index[dst], index[src]] = 1.0
    aggregation = adjacency / adjacency.sum(axis=1, keepdims=True)
    features = node_features([codes[i] for i in ids], dim)
    return features, aggregation


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def _forward(model: GnnModel, features: np.ndarray, aggregation: np.ndarray):
    s1 = aggregation @ features
    z1 = s1 @ model.W1 + model.b1
    h1 = np.maximum(z1, 0.0)
    s2 = aggregation @ h1
    z2 = s2 @ model.W2 + model.b2
    h2 = np.maximum(z2, 0.0)
    pooled = h2.mean(axis=0)
    logit = float(pooled @ model.w) + model.b
    return logit, (s1, z1, s2, z2, pooled)


def score_graph(model: GnnModel, graph: object) -> float:
    features, aggregation = graph_matrices(graph, model.dim)
    logit, _ = _forward(model, features, aggregation)
    return _sigmoid(logit)


def _zero_grads(model: GnnModel) -> dict[str, np.ndarray]:
    return {"W1": np.zeros_like(model.W1), "b1": np.zeros_like(model.b1),
            "W2": np.zeros_like(model.W2), "b2": np.zeros_like(model.b2),
            "w": np.zeros_like(model.w), "b": np.zeros(1)}


def loss_and_grads(model: GnnModel,
                   batch: Sequence[tuple[np.ndarray, np.ndarray, int]]):
    """Mean binary cross-entropy over (features, aggregation, label) triples.

    Loss uses the overflow-safe form max(z,0) + log1p(exp(-|z|)) - y*z.
    """
    if not batch:
        raise TrainingError("empty batch")
    grads = _zero_grads(model)
    total = 0.0
    for features, aggregation, label in batch:
        logit, (s1, z1, s2, z2, pooled) = _forward(model, features, aggregation)
        total += max(logit, 0.0) + math.log1p(math.exp(-abs(logit))) - label * logit
        n = features.shape[0]
        dz = _sigmoid(logit) - label
        grads["w"] += dz * pooled
        grads["b"][0] += dz
        dh2 = np.outer(np.full(n, dz / n), model.w)
        dz2 = dh2 * (z2 > 0.0)
        grads["W2"] += s2.T @ dz2
        grads["b2"] += dz2.sum(axis=0)
        dh1 = aggregation.T @ (dz2 @ model.W2.T)
        dz1 = dh1 * (z1 > 0.0)
        grads["W1"] += s1.T @ dz1
        grads["b1"] += dz1.sum(axis=0)
    count = len(batch)
    for key in grads:
        grads[key] /= count
    return total / count, grads


def train_model(samples: Sequence[tuple[object, int]], *,
                epochs: int = 150, lr: float = 0.01, seed: int = 0,
                dim: int = DIM_DEFAULT, hidden: int = HIDDEN_DEFAULT):
    """Full-batch Adam. Returns (model, final_loss).

    `samples` holds (graph JSON object, label) pairs; labels must
    include both classes or the sigmoid head trivially saturates.
    """
    if not samples:
        raise TrainingError("dataset is empty")
    labels = {label for _, label in samples}
    if labels - {0, 1}:
        raise TrainingError(f"labels must be 0 or 1, got {sorted(labels - {0, 1})}")
    if len(labels) < 2:
        raise TrainingError(f"dataset needs both classes, got only label {labels.pop()}")
    if epochs < 1:
        raise TrainingError("epochs must be >= 1")
    batch = [(*graph_matrices(graph, dim), label) for graph, label in samples]
    model = init_model(dim=dim, hidden=hidden, seed=seed)
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    first = _zero_grads(model)
    second = _zero_grads(model)
    params = {"W1": model.W1, "b1": model.b1, "W2": model.W2, "b2": model.b2,
              "w": model.w, "b": np.array([model.b])}
    for step in range(1, epochs + 1):
        model.b = float(params["b"][0])
        _, grads = loss_and_grads(model, batch)
        for key in params:
            first[key] = beta1 * first[key] + (1 - beta1) * grads[key]
            second[key] = beta2 * second[key] + (1 - beta2) * grads[key] ** 2
            corrected1 = first[key] / (1 - beta1 ** step)
            corrected2 = second[key] / (1 - beta2 ** step)
            params[key] -= lr * corrected1 / (np.sqrt(corrected2) + eps)
    model.b = float(params["b"][0])
    loss, _ = loss_and_grads(model, batch)
    return model, loss


def accuracy(model: GnnModel, samples: Sequence[tuple[object, int]],
             threshold: float = 0.5) -> float:
    if not samples:
        raise ValueError("no samples to score")
    hits = sum((score_graph(model, graph) >= threshold) == bool(label)
               for graph, label in samples)
    return hits / len(samples)

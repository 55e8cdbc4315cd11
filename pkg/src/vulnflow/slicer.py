"""Backward flow-path slicing from potential sink points.

From each sink, walk dependence edges backwards depth-first, collecting
simple paths. At the sink itself only control predecessors and data
predecessors whose variable is one of the sink's key variables are
admissible; past the first hop every predecessor is. A path ends when
the node budget is reached or no unvisited admissible predecessor
remains, so only maximal paths are emitted.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .graph import CONTROL, FlowPath, ProgramDependenceGraph, predecessors
from .sinks import SinkPoint


@dataclass(frozen=True)
class SliceParams:
    k: int = 5
    sparsity: float = 0.5

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if not (0.0 <= self.sparsity < 1.0):
            raise ValueError(f"sparsity must be in [0, 1), got {self.sparsity}")


def max_nodes(params: SliceParams, graph_size: int) -> int:
    """Effective path budget: min(k, floor((1 - sparsity) * m)), at least 1.

    The product is evaluated in exact rational arithmetic: with floats,
    (1 - 0.9) * 20 lands just below 2 and the floor would lose a node.
    """
    kept = (1 - Fraction(str(params.sparsity))) * graph_size
    return max(1, min(params.k, int(kept)))


def extract_prec_nodes(pdg: ProgramDependenceGraph, node: int, psp: SinkPoint) -> set[int]:
    """Predecessor ids admissible when expanding `node` on a slice for `psp`."""
    at_sink = node == psp.node
    admissible: set[int] = set()
    for edge in predecessors(pdg, node):
        if edge.kind == CONTROL:
            admissible.add(edge.src)
        elif not at_sink or edge.var in psp.key_vars:
            admissible.add(edge.src)
    return admissible


def generate_slices(pdg: ProgramDependenceGraph, params: SliceParams,
                    sinks: Iterable[SinkPoint]) -> list[FlowPath]:
    """All maximal backward paths, one DFS per sink, duplicates removed.

    Deterministic: sinks are processed in (node, kind) order and
    neighbors expanded in ascending node id.
    """
    if not pdg.nodes:
        return []
    budget = max_nodes(params, len(pdg.nodes))
    paths: list[FlowPath] = []

    def walk(psp: SinkPoint, path: list[int], on_path: set[int]) -> None:
        if len(path) == budget:
            paths.append(FlowPath(nodes=tuple(path), psp=psp))
            return
        frontier = sorted(extract_prec_nodes(pdg, path[-1], psp) - on_path)
        if not frontier:
            paths.append(FlowPath(nodes=tuple(path), psp=psp))
            return
        for nxt in frontier:
            on_path.add(nxt)
            path.append(nxt)
            walk(psp, path, on_path)
            path.pop()
            on_path.remove(nxt)

    for psp in sorted(sinks, key=SinkPoint.sort_key):
        walk(psp, [psp.node], {psp.node})
    return dedup_paths(paths)


def dedup_paths(paths: Sequence[FlowPath]) -> list[FlowPath]:
    """Drop exact duplicates (same node sequence), keeping first occurrence."""
    seen: set[tuple[int, ...]] = set()
    out: list[FlowPath] = []
    for path in paths:
        if path.nodes not in seen:
            seen.add(path.nodes)
            out.append(path)
    return out

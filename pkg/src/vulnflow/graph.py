"""Core dependence-graph types and queries.

A program dependence graph here is a set of statement nodes connected by
directed control edges (branch decides whether statement runs) and data
edges (definition reaches a use, labelled with the variable). Everything
downstream -- risky-point extraction, slicing, scoring -- works on these
types only.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import TYPE_CHECKING, Iterable, Optional

if TYPE_CHECKING:
    from .sinks import SinkPoint

CONTROL = "control"
DATA = "data"


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class StatementNode:
    """One statement: opaque id, 1-based source line, verbatim code text."""

    id: int
    line: int
    code: str


@dataclass(frozen=True)
class DependenceEdge:
    """Directed edge src -> dst; data edges carry the flowing variable."""

    src: int
    dst: int
    kind: str
    var: Optional[str] = None

    def sort_key(self) -> tuple:
        return (self.src, self.dst, self.kind, self.var or "")


@dataclass(frozen=True)
class ProgramDependenceGraph:
    id: str
    nodes: tuple[StatementNode, ...]
    edges: tuple[DependenceEdge, ...]

    @cached_property
    def _by_id(self) -> dict[int, StatementNode]:
        return {n.id: n for n in self.nodes}

    @cached_property
    def _preds(self) -> dict[int, tuple[DependenceEdge, ...]]:
        acc: dict[int, list[DependenceEdge]] = {n.id: [] for n in self.nodes}
        for e in self.edges:
            if e.dst in acc:
                acc[e.dst].append(e)
        return {nid: tuple(sorted(es, key=DependenceEdge.sort_key)) for nid, es in acc.items()}

    def node(self, node_id: int) -> StatementNode:
        try:
            return self._by_id[node_id]
        except KeyError:
            raise GraphError(f"unknown node {node_id}") from None

    def has_node(self, node_id: int) -> bool:
        return node_id in self._by_id

    def node_ids(self) -> frozenset[int]:
        return frozenset(self._by_id)

    def line_of(self, node_id: int) -> int:
        return self.node(node_id).line


@dataclass(frozen=True)
class FlowPath:
    """A backward slice path, stored sink-first in traversal order."""

    nodes: tuple[int, ...]
    psp: "SinkPoint"

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def sink(self) -> int:
        return self.nodes[0]


@dataclass(frozen=True)
class LabeledSample:
    """A graph with its ground truth: label and vulnerable source lines."""

    sample_id: str
    pdg: ProgramDependenceGraph
    label: int
    vuln_lines: tuple[int, ...]
    cwe: str


def validate(pdg: ProgramDependenceGraph) -> list[str]:
    """Structural check; returns one message per violation, [] when clean."""
    violations: list[str] = []
    seen_ids: set[int] = set()
    for n in pdg.nodes:
        if n.id in seen_ids:
            violations.append(f"node {n.id}: duplicate id")
        seen_ids.add(n.id)
        if n.line < 1:
            violations.append(f"node {n.id}: line {n.line} < 1")
        if not n.code.strip():
            violations.append(f"node {n.id}: empty code")
    seen_edges: set[tuple] = set()
    for e in pdg.edges:
        for endpoint in (e.src, e.dst):
            if endpoint not in seen_ids:
                violations.append(f"edge {e.src}→{e.dst}: unknown node {endpoint}")
        if e.src == e.dst:
            violations.append(f"edge {e.src}→{e.dst}: self-loop")
        if e.kind not in (CONTROL, DATA):
            violations.append(f"edge {e.src}→{e.dst}: unknown kind {e.kind!r}")
        elif e.kind == DATA and not e.var:
            violations.append(f"edge {e.src}→{e.dst}: data edge missing var")
        elif e.kind == CONTROL and e.var is not None:
            violations.append(f"edge {e.src}→{e.dst}: control edge carries var {e.var!r}")
        key = (e.src, e.dst, e.kind, e.var)
        if key in seen_edges:
            violations.append(f"edge {e.src}→{e.dst}: duplicate ({e.kind}, {e.var})")
        seen_edges.add(key)
    return violations


def predecessors(pdg: ProgramDependenceGraph, node_id: int,
                 kind_filter: Optional[str] = None) -> list[DependenceEdge]:
    """Incoming edges of node_id, sorted by (src, dst, kind, var)."""
    if not pdg.has_node(node_id):
        raise GraphError(f"unknown node {node_id}")
    edges = pdg._preds.get(node_id, ())
    if kind_filter is None:
        return list(edges)
    return [e for e in edges if e.kind == kind_filter]


def induced_subgraph(pdg: ProgramDependenceGraph, node_ids: Iterable[int]) -> ProgramDependenceGraph:
    """Subgraph on node_ids keeping every edge with both endpoints inside."""
    keep = set(node_ids)
    missing = keep - set(pdg._by_id)
    if missing:
        raise GraphError(f"unknown node {min(missing)}")
    nodes = tuple(n for n in pdg.nodes if n.id in keep)
    edges = tuple(e for e in pdg.edges if e.src in keep and e.dst in keep)
    return ProgramDependenceGraph(id=pdg.id, nodes=nodes, edges=edges)


def program_order(path: FlowPath, pdg: ProgramDependenceGraph) -> list[tuple[int, str]]:
    """Path statements as (line, code), sorted by line then node id."""
    ordered = sorted(path.nodes, key=lambda nid: (pdg.line_of(nid), nid))
    return [(pdg.node(nid).line, pdg.node(nid).code) for nid in ordered]


def path_lines(path: FlowPath, pdg: ProgramDependenceGraph) -> list[int]:
    """Distinct source lines touched by the path, ascending."""
    return sorted({pdg.line_of(nid) for nid in path.nodes})

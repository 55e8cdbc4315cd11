"""Dependence-graph construction for parsed programs.

Pipeline: control-flow graph from the block structure, post-dominator
sets by fixpoint, control dependence from branch edges (a statement
depends on a branch when it post-dominates one successor but not the
branch itself), reaching definitions by forward fixpoint, and data
edges wherever a definition reaches a use of the same variable.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Optional

from .graph import CONTROL, DATA, DependenceEdge, ProgramDependenceGraph, StatementNode
from .minic import (
    BLOCK_DELIM,
    DEFAULT_OUT_PARAMS,
    IfConstruct,
    LoopConstruct,
    Program,
    RETURN,
    parse_minic,
)

ENTRY = 0
EXIT = -1


class BuilderError(ValueError):
    pass


@dataclass(frozen=True)
class ControlFlowGraph:
    """Successor map over statement lines plus ENTRY/EXIT sentinels."""

    succs: dict[int, tuple[int, ...]]

    @cached_property
    def preds(self) -> dict[int, tuple[int, ...]]:
        acc: dict[int, list[int]] = {n: [] for n in self.succs}
        for u, outs in self.succs.items():
            for v in outs:
                acc[v].append(u)
        return {n: tuple(sorted(ps)) for n, ps in acc.items()}

    @property
    def nodes(self) -> tuple[int, ...]:
        return tuple(sorted(self.succs))

    @property
    def statement_nodes(self) -> tuple[int, ...]:
        return tuple(n for n in self.nodes if n not in (ENTRY, EXIT))

    def successors(self, n: int) -> tuple[int, ...]:
        return self.succs[n]

    def reverse_postorder(self) -> list[int]:
        """Depth-first order from ENTRY; unreachable nodes appended sorted."""
        seen: set[int] = set()
        post: list[int] = []

        def visit(root: int) -> None:
            stack: list[tuple[int, int]] = [(root, 0)]
            seen.add(root)
            while stack:
                node, idx = stack.pop()
                outs = sorted(self.succs[node])
                if idx < len(outs):
                    stack.append((node, idx + 1))
                    nxt = outs[idx]
                    if nxt not in seen:
                        seen.add(nxt)
                        stack.append((nxt, 0))
                else:
                    post.append(node)

        visit(ENTRY)
        order = list(reversed(post))
        order.extend(n for n in self.nodes if n not in seen)
        return order


def build_cfg(program: Program) -> ControlFlowGraph:
    by_line = {s.line: s for s in program.statements}
    succs: dict[int, tuple[int, ...]] = {EXIT: ()}

    def wire_block(items, follow: int) -> int:
        nxt = follow
        for item in reversed(items):
            nxt = wire_item(item, nxt)
        return nxt

    def wire_item(item, follow: int) -> int:
        if isinstance(item, int):
            if by_line[item].kind == RETURN:
                succs[item] = (EXIT,)
            else:
                succs[item] = (follow,)
            return item
        if isinstance(item, IfConstruct):
            then_entry = wire_block(item.then, follow)
            else_entry = wire_block(item.orelse, follow) if item.orelse is not None else follow
            succs[item.header] = tuple(sorted({then_entry, else_entry}))
            return item.header
        if isinstance(item, LoopConstruct):
            body_entry = wire_block(item.body, item.header)
            succs[item.header] = tuple(sorted({body_entry, follow}))
            return item.header
        raise BuilderError(f"unknown structure item {item!r}")

    succs[ENTRY] = (wire_block(program.body, EXIT),)
    return ControlFlowGraph(succs=succs)


@dataclass(frozen=True)
class PostDominatorTree:
    """Immediate post-dominator per node; EXIT has none."""

    ipdom: dict[int, int]

    def post_dominators(self, n: int) -> frozenset[int]:
        out = {n}
        while n in self.ipdom:
            n = self.ipdom[n]
            out.add(n)
        return frozenset(out)

    def strict_post_dominators(self, n: int) -> frozenset[int]:
        return self.post_dominators(n) - {n}


def post_dominators(cfg: ControlFlowGraph) -> PostDominatorTree:
    nodes = cfg.nodes
    # Every node must reach EXIT or post-dominance is undefined.
    reaches: set[int] = {EXIT}
    frontier = [EXIT]
    while frontier:
        node = frontier.pop()
        for p in cfg.preds[node]:
            if p not in reaches:
                reaches.add(p)
                frontier.append(p)
    stuck = [n for n in nodes if n not in reaches]
    if stuck:
        raise BuilderError(f"node {stuck[0]} cannot reach the function exit")

    full = set(nodes)
    pdom: dict[int, set[int]] = {n: set(full) for n in nodes}
    pdom[EXIT] = {EXIT}
    changed = True
    while changed:
        changed = False
        for n in nodes:
            if n == EXIT:
                continue
            new = set(full)
            for s in cfg.succs[n]:
                new &= pdom[s]
            new.add(n)
            if new != pdom[n]:
                pdom[n] = new
                changed = True

    ipdom: dict[int, int] = {}
    for n in nodes:
        if n == EXIT:
            continue
        strict = pdom[n] - {n}
        # Closest strict post-dominator carries the largest chain set.
        ipdom[n] = max(strict, key=lambda d: (len(pdom[d]), d))
    return PostDominatorTree(ipdom=ipdom)


def control_dependence(cfg: ControlFlowGraph,
                       pdt: PostDominatorTree) -> frozenset[tuple[int, int]]:
    """(controller, dependent) pairs over statement nodes.

    Loop headers may control themselves; the caller decides whether to
    keep such pairs. ENTRY/EXIT never appear on either side.
    """
    pairs: set[tuple[int, int]] = set()
    for u in cfg.nodes:
        if len(cfg.succs[u]) < 2:
            continue
        spdom_u = pdt.strict_post_dominators(u)
        for v in cfg.succs[u]:
            for w in pdt.post_dominators(v):
                if w in spdom_u or w in (ENTRY, EXIT) or u in (ENTRY, EXIT):
                    continue
                pairs.add((u, w))
    return frozenset(pairs)


Definition = tuple[str, int]  # (variable, defining node)


@dataclass(frozen=True)
class ReachingDefinitions:
    in_sets: dict[int, frozenset[Definition]]
    out_sets: dict[int, frozenset[Definition]]
    iterations: int


def reaching_definitions(cfg: ControlFlowGraph, program: Program) -> ReachingDefinitions:
    """Forward may-analysis; weak defs generate without killing."""
    by_line = {s.line: s for s in program.statements}
    all_defs: dict[str, set[Definition]] = {}
    gen: dict[int, set[Definition]] = {}
    for n in cfg.nodes:
        stmt = by_line.get(n)
        gen[n] = {(v, n) for v in stmt.defs} if stmt else set()
        for v, d in gen[n]:
            all_defs.setdefault(v, set()).add((v, d))

    def kill(n: int) -> set[Definition]:
        stmt = by_line.get(n)
        if stmt is None:
            return set()
        out: set[Definition] = set()
        for v in stmt.strong_defs:
            out |= all_defs.get(v, set())
        return out

    order = cfg.reverse_postorder()
    in_sets: dict[int, set[Definition]] = {n: set() for n in cfg.nodes}
    out_sets: dict[int, set[Definition]] = {n: set() for n in cfg.nodes}
    iterations = 0
    changed = True
    while changed:
        changed = False
        iterations += 1
        for n in order:
            new_in: set[Definition] = set()
            for p in cfg.preds[n]:
                new_in |= out_sets[p]
            new_out = gen[n] | (new_in - kill(n))
            if new_in != in_sets[n] or new_out != out_sets[n]:
                in_sets[n] = new_in
                out_sets[n] = new_out
                changed = True
    return ReachingDefinitions(
        in_sets={n: frozenset(s) for n, s in in_sets.items()},
        out_sets={n: frozenset(s) for n, s in out_sets.items()},
        iterations=iterations,
    )


def data_dependence(cfg: ControlFlowGraph, program: Program,
                    rd: ReachingDefinitions) -> frozenset[tuple[int, int, str]]:
    """(def node, use node, var) triples; no self-dependences."""
    by_line = {s.line: s for s in program.statements}
    deps: set[tuple[int, int, str]] = set()
    for n in cfg.statement_nodes:
        stmt = by_line[n]
        for var in stmt.uses:
            for v, d in rd.in_sets[n]:
                if v == var and d != n and d not in (ENTRY, EXIT):
                    deps.add((d, n, var))
    return frozenset(deps)


def build_pdg(source: str, graph_id: str = "pdg",
              out_params: Optional[dict[str, tuple[int, ...]]] = None) -> ProgramDependenceGraph:
    """Parse source and assemble its dependence graph.

    Node ids equal source line numbers; block delimiters produce no node.
    """
    program = parse_minic(source, out_params=out_params or DEFAULT_OUT_PARAMS)
    return build_pdg_from_program(program, graph_id)


def build_pdg_from_program(program: Program, graph_id: str = "pdg") -> ProgramDependenceGraph:
    cfg = build_cfg(program)
    pdt = post_dominators(cfg)
    ctrl = control_dependence(cfg, pdt)
    rd = reaching_definitions(cfg, program)
    data = data_dependence(cfg, program, rd)
    nodes = tuple(StatementNode(id=s.line, line=s.line, code=s.code)
                  for s in program.statements if s.kind != BLOCK_DELIM)
    edges: list[DependenceEdge] = []
    for u, w in sorted(ctrl):
        if u != w:
            edges.append(DependenceEdge(src=u, dst=w, kind=CONTROL))
    for d, u, var in sorted(data):
        edges.append(DependenceEdge(src=d, dst=u, kind=DATA, var=var))
    return ProgramDependenceGraph(id=graph_id, nodes=nodes, edges=tuple(edges))

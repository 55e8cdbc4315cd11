import dataclasses

import pytest

from vulnflow.graph import (
    CONTROL,
    DATA,
    DependenceEdge,
    FlowPath,
    GraphError,
    ProgramDependenceGraph,
    StatementNode,
    induced_subgraph,
    path_lines,
    predecessors,
    program_order,
    validate,
)
from vulnflow.sinks import FC, SinkPoint


def small_pdg():
    return ProgramDependenceGraph(
        id="g",
        nodes=(
            StatementNode(1, 1, "int a = 0;"),
            StatementNode(2, 2, "int b = a;"),
            StatementNode(3, 3, "use(b);"),
        ),
        edges=(
            DependenceEdge(1, 2, DATA, "a"),
            DependenceEdge(2, 3, DATA, "b"),
            DependenceEdge(1, 3, CONTROL),
        ),
    )


def sink(node):
    return SinkPoint(node=node, kind=FC, key_vars=frozenset(), detail="x")


def test_validate_clean_graph():
    assert validate(small_pdg()) == []


@pytest.mark.parametrize("edge,needle", [
    (DependenceEdge(1, 9, DATA, "a"), "unknown node 9"),
    (DependenceEdge(2, 2, DATA, "a"), "self-loop"),
    (DependenceEdge(1, 2, DATA, None), "data edge missing var"),
    (DependenceEdge(1, 2, CONTROL, "a"), "control edge carries var"),
    (DependenceEdge(1, 2, "weird", None), "unknown kind"),
])
def test_validate_flags_bad_edges(edge, needle):
    pdg = small_pdg()
    bad = dataclasses.replace(pdg, edges=pdg.edges + (edge,))
    assert any(needle in v for v in validate(bad))


def test_validate_flags_duplicate_edge_and_bad_nodes():
    pdg = small_pdg()
    dup = dataclasses.replace(pdg, edges=pdg.edges + (DependenceEdge(1, 2, DATA, "a"),))
    assert any("duplicate" in v for v in validate(dup))
    bad_nodes = dataclasses.replace(
        pdg, nodes=pdg.nodes + (StatementNode(1, 0, "  "),))
    messages = validate(bad_nodes)
    assert any("duplicate id" in v for v in messages)
    assert any("line 0 < 1" in v for v in messages)
    assert any("empty code" in v for v in messages)


def test_node_lookup_and_errors():
    pdg = small_pdg()
    assert pdg.node(2).code == "int b = a;"
    assert pdg.has_node(3) and not pdg.has_node(4)
    assert pdg.line_of(1) == 1
    with pytest.raises(GraphError, match="unknown node 42"):
        pdg.node(42)


def test_predecessors_sorted_and_filterable():
    pdg = small_pdg()
    edges = predecessors(pdg, 3)
    assert [(e.src, e.kind) for e in edges] == [(1, CONTROL), (2, DATA)]
    assert [e.kind for e in predecessors(pdg, 3, kind_filter=DATA)] == [DATA]
    assert predecessors(pdg, 1) == []
    with pytest.raises(GraphError):
        predecessors(pdg, 99)


def test_induced_subgraph_keeps_internal_edges_only():
    sub = induced_subgraph(small_pdg(), {1, 3})
    assert sorted(n.id for n in sub.nodes) == [1, 3]
    assert [(e.src, e.dst, e.kind) for e in sub.edges] == [(1, 3, CONTROL)]
    with pytest.raises(GraphError):
        induced_subgraph(small_pdg(), {1, 8})


def test_program_order_and_path_lines():
    pdg = small_pdg()
    path = FlowPath(nodes=(3, 1, 2), psp=sink(3))
    assert program_order(path, pdg) == [
        (1, "int a = 0;"), (2, "int b = a;"), (3, "use(b);")]
    assert path_lines(path, pdg) == [1, 2, 3]
    assert path.sink == 3 and len(path) == 3


def test_types_are_immutable():
    pdg = small_pdg()
    with pytest.raises(dataclasses.FrozenInstanceError):
        pdg.nodes[0].code = "other"
    with pytest.raises(dataclasses.FrozenInstanceError):
        pdg.id = "other"

import random

import pytest

from oracles import brute_max_nodes, brute_slices, random_pdg, random_sinks
from vulnflow.graph import DATA, DependenceEdge, FlowPath, ProgramDependenceGraph, StatementNode
from vulnflow.sinks import AE, AU, FC, SinkPoint, extract_sink_nodes, load_sink_config
from vulnflow.slicer import SliceParams, dedup_paths, extract_prec_nodes, generate_slices, max_nodes


def sink(node, key_vars=(), kind=FC):
    return SinkPoint(node=node, kind=kind, key_vars=frozenset(key_vars), detail="x")


def test_params_validation():
    with pytest.raises(ValueError, match="k must be >= 1"):
        SliceParams(k=0)
    with pytest.raises(ValueError, match="sparsity must be in"):
        SliceParams(sparsity=1.0)
    with pytest.raises(ValueError, match="sparsity must be in"):
        SliceParams(sparsity=-0.1)


def test_budget_survives_float_rounding():
    # (1 - 0.9) * 20 == 1.9999... in binary floats; the floor must still be 2.
    assert max_nodes(SliceParams(k=10, sparsity=0.9), 20) == 2
    assert max_nodes(SliceParams(k=3, sparsity=0.5), 12) == 3
    assert max_nodes(SliceParams(k=10, sparsity=0.5), 12) == 6
    assert max_nodes(SliceParams(k=5, sparsity=0.0), 2) == 2
    assert max_nodes(SliceParams(k=5, sparsity=0.99), 50) == 1  # never below one node


def test_budget_matches_rational_oracle_on_grid():
    for k in range(1, 11):
        for sparsity in ("0", "0.25", "0.5", "0.9"):
            for m in range(1, 31):
                params = SliceParams(k=k, sparsity=float(sparsity))
                assert max_nodes(params, m) == brute_max_nodes(k, sparsity, m), (k, sparsity, m)


def chain_pdg():
    """1 -a-> 2 -a-> 3 -b-> 4 with an extra control edge 1 -> 4."""
    return ProgramDependenceGraph(
        id="chain",
        nodes=tuple(StatementNode(i, i, f"s{i};") for i in (1, 2, 3, 4)),
        edges=(
            DependenceEdge(1, 2, DATA, "a"),
            DependenceEdge(2, 3, DATA, "a"),
            DependenceEdge(3, 4, DATA, "b"),
            DependenceEdge(1, 4, "control"),
        ),
    )


def test_key_variable_filter_applies_at_sink_only():
    pdg = chain_pdg()
    psp = sink(4, key_vars=())  # data into the sink is inadmissible
    assert extract_prec_nodes(pdg, 4, psp) == {1}  # control edge still passes
    # One hop past the sink the filter is off.
    assert extract_prec_nodes(pdg, 3, psp) == {2}
    paths = generate_slices(pdg, SliceParams(k=4, sparsity=0.0), [psp])
    assert [p.nodes for p in paths] == [(4, 1)]


def test_key_variable_admits_matching_data_edge():
    pdg = chain_pdg()
    psp = sink(4, key_vars={"b"})
    paths = generate_slices(pdg, SliceParams(k=4, sparsity=0.0), [psp])
    assert [p.nodes for p in paths] == [(4, 1), (4, 3, 2, 1)]


def test_budget_truncates_paths():
    pdg = chain_pdg()
    psp = sink(4, key_vars={"b"})
    paths = generate_slices(pdg, SliceParams(k=2, sparsity=0.0), [psp])
    assert [p.nodes for p in paths] == [(4, 1), (4, 3)]


def test_maximal_paths_only():
    pdg = chain_pdg()
    psp = sink(3, key_vars={"a"})
    paths = generate_slices(pdg, SliceParams(k=4, sparsity=0.0), [psp])
    # (3,) and (3, 2) are prefixes of the emitted maximal path.
    assert [p.nodes for p in paths] == [(3, 2, 1)]


def test_empty_graph_and_sinkless_run():
    empty = ProgramDependenceGraph(id="e", nodes=(), edges=())
    assert generate_slices(empty, SliceParams(), [sink(1)]) == []
    assert generate_slices(chain_pdg(), SliceParams(), []) == []


def test_dedup_keeps_first_occurrence():
    first = FlowPath(nodes=(4, 1), psp=sink(4, kind=FC))
    twin = FlowPath(nodes=(4, 1), psp=sink(4, kind=AE))
    other = FlowPath(nodes=(4, 3), psp=sink(4, kind=AE))
    out = dedup_paths([first, twin, other])
    assert [(p.nodes, p.psp.kind) for p in out] == [((4, 1), FC), ((4, 3), AE)]


def test_sinks_processed_in_node_then_kind_order():
    pdg = chain_pdg()
    sinks = [sink(4, key_vars={"b"}, kind=AE), sink(2, key_vars={"a"}, kind=AU)]
    paths = generate_slices(pdg, SliceParams(k=4, sparsity=0.0), sinks)
    assert [p.nodes for p in paths] == [(2, 1), (4, 1), (4, 3, 2, 1)]
    assert paths[0].psp.kind == AU


def test_motivating_fixture_paths(motivating_pdg):
    config = load_sink_config()
    sinks = extract_sink_nodes(motivating_pdg, config)
    paths = generate_slices(motivating_pdg, SliceParams(k=5, sparsity=0.5), sinks)
    assert [p.nodes for p in paths] == [
        (2,),
        (8,),
        (10, 5),
        (11, 7, 6, 2),
        (11, 8),
        (13, 7, 6, 2),
        (13, 11, 7, 6, 2),
        (13, 11, 8),
    ]
    # Every path starts at its own sink.
    assert all(p.sink == p.psp.node for p in paths)


def test_matches_brute_enumeration_on_random_graphs():
    rng = random.Random(404)
    for trial in range(50):
        pdg = random_pdg(rng, graph_id=f"r{trial}")
        sinks = random_sinks(rng, pdg)
        params = SliceParams(k=rng.randint(1, 6), sparsity=rng.choice((0.0, 0.25, 0.5)))
        got = generate_slices(pdg, params, sinks)
        expected = brute_slices(pdg, max_nodes(params, len(pdg.nodes)), sinks)
        got_set = {(p.nodes, p.psp) for p in got}
        expected_set = set(expected)
        assert got_set == expected_set, (trial, params)
        assert len(got) == len(got_set)  # no duplicates survive

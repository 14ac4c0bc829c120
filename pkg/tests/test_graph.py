import io
import logging

import numpy as np
import pytest
from hypothesis import given, strategies as st

from network.graph import (BaseGraph, InfluenceNetwork, load_edge_list, load_edge_list_file,
                           read_probability_dump, write_probability_dump)
from utils.errors import DomainError, EdgeListParseError


def test_directed_edge_list():
    graph = load_edge_list("0 1\n1 2", directed=True)
    assert graph.node_count == 3
    assert set(graph.edges) == {(0, 1), (1, 2)}


def test_undirected_edge_list_stores_both_arcs():
    graph = load_edge_list("0 1", directed=False)
    assert set(graph.edges) == {(0, 1), (1, 0)}


def test_self_loop_dropped():
    graph = load_edge_list("5 5")
    assert graph.node_count == 1
    assert graph.arc_count == 0


def test_empty_input():
    graph = load_edge_list("# nothing here\n\n")
    assert graph.node_count == 0
    assert graph.arc_count == 0


def test_sparse_ids_are_remapped_and_kept_as_labels():
    graph = load_edge_list("% konect header\n10 30\n30 20\n10 30\n")
    assert graph.node_count == 3
    assert graph.labels.tolist() == [10, 20, 30]
    assert set(graph.edges) == {(0, 2), (2, 1)}


@pytest.mark.parametrize("text, line_number", [
    ("0 1\nbad", 2),
    ("0 1\n1 x\n", 2),
    ("7\n", 1),
    ("0 -3\n", 1),
])
def test_malformed_lines(text, line_number):
    with pytest.raises(EdgeListParseError) as info:
        load_edge_list(text)
    assert info.value.line_number == line_number


def test_weight_column_warns_once(caplog):
    with caplog.at_level(logging.WARNING):
        graph = load_edge_list("0 1 0.5\n1 2 0.7\n")
    assert graph.arc_count == 2
    assert sum("extra columns" in r.message for r in caplog.records) == 1


def test_edge_list_file(tmp_path):
    path = tmp_path / "edges.txt"
    path.write_text("1 2\n2 3\n")
    graph = load_edge_list_file(str(path), directed=False)
    assert graph.arc_count == 4


def test_adjacency_views():
    graph = BaseGraph.from_arcs(4, [(0, 1), (0, 2), (3, 1), (0, 1)])
    assert graph.arc_count == 3
    assert graph.out_neighbors(0).tolist() == [1, 2]
    assert sorted(graph.in_neighbors(1).tolist()) == [0, 3]
    assert graph.arc_index(3, 1) >= 0
    assert graph.arc_index(1, 3) == -1
    assert graph.degrees().tolist() == [2, 2, 1, 1]


def test_out_of_range_arc():
    with pytest.raises(DomainError):
        BaseGraph.from_arcs(2, [(0, 2)])


def test_zero_probabilities_are_omitted():
    graph = BaseGraph.from_arcs(3, [(0, 1), (1, 2)])
    net = InfluenceNetwork.from_probabilities(graph, np.array([0.0, 0.3]))
    assert net.arc_count == 1
    assert net.probability(1, 2) == pytest.approx(0.3)
    assert net.probability(0, 1) == 0.0


def test_probability_range_checked():
    graph = BaseGraph.from_arcs(2, [(0, 1)])
    with pytest.raises(DomainError):
        InfluenceNetwork.from_probabilities(graph, np.array([1.5]))


def test_probability_dump_round_trip():
    graph = BaseGraph.from_arcs(3, [(0, 1), (1, 2), (2, 0)])
    nets = [InfluenceNetwork(graph, np.array([0.1, 0.25, 1.0 / 3.0])),
            InfluenceNetwork(graph, np.array([0.5, 0.5, 0.5]))]
    buffer = io.StringIO()
    write_probability_dump(nets, buffer)
    restored = read_probability_dump(buffer.getvalue(), graph, 2)
    for before, after in zip(nets, restored):
        assert after.prob_map().keys() == before.prob_map().keys()
        np.testing.assert_allclose(after.prob, before.prob, rtol=1e-11)


def test_probability_dump_rejects_unknown_advertiser():
    graph = BaseGraph.from_arcs(2, [(0, 1)])
    with pytest.raises(EdgeListParseError):
        read_probability_dump("0 1 3 0.5\n", graph, 2)


@given(st.lists(st.tuples(st.integers(0, 30), st.integers(0, 30)), max_size=60), st.booleans())
def test_loaded_graph_is_simple(pairs, directed):
    text = "\n".join(f"{u} {v}" for u, v in pairs)
    graph = load_edge_list(text, directed)
    edges = graph.edges
    assert len(edges) == len(set(edges))
    assert all(u != v for u, v in edges)
    assert all(0 <= u < graph.node_count and 0 <= v < graph.node_count for u, v in edges)
    if not directed:
        assert set(edges) == {(v, u) for u, v in edges}

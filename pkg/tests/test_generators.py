import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from network.generators import (GeneratorConfig, NetworkMode, assign_lambda_probabilities,
                                assign_uniform_probabilities, cycle_graph, graph_from_config,
                                lambda_probabilities, networks_from_config, node_swap_variant,
                                path_graph, preferential_attachment_graph, random_regular_graph,
                                replicate_for_advertisers, star_graph, swap_count)
from network.graph import BaseGraph, InfluenceNetwork
from utils.config import Config
from utils.errors import DomainError


def full_matrix(net: InfluenceNetwork) -> np.ndarray:
    matrix = np.zeros((net.node_count, net.node_count))
    matrix[net.src, net.dst] = net.prob
    return matrix


def test_lambda_product_rule():
    graph = BaseGraph.from_arcs(3, [(0, 1), (1, 2)])
    net = lambda_probabilities(graph, np.array([0.4, 0.4, 0.0]))
    assert net.probability(0, 1) == pytest.approx(0.16)
    # lambda_2 = 0 removes every arc touching node 2
    assert net.arc_count == 1


def test_lambda_zero_max_gives_no_arcs():
    graph = cycle_graph(5)
    net = assign_lambda_probabilities(graph, 0.0, rng_seed=3)
    assert net.arc_count == 0


def test_lambda_draw_is_deterministic_and_bounded():
    graph = preferential_attachment_graph(60, 2, rng_seed=1)
    a = assign_lambda_probabilities(graph, 0.4, rng_seed=11)
    b = assign_lambda_probabilities(graph, 0.4, rng_seed=11)
    assert a.same_as(b)
    assert a.prob.max() <= 0.16 + 1e-12
    assert a.prob.min() > 0.0


@pytest.mark.parametrize("value", [-0.1, 1.5])
def test_lambda_max_domain(value):
    with pytest.raises(DomainError):
        assign_lambda_probabilities(path_graph(3), value, rng_seed=0)


def test_uniform_probabilities():
    graph = path_graph(4)
    net = assign_uniform_probabilities(graph, 0.02)
    assert np.all(net.prob == 0.02)
    assert assign_uniform_probabilities(graph, 0.0).arc_count == 0
    with pytest.raises(DomainError):
        assign_uniform_probabilities(graph, 1.01)


def test_swap_count():
    assert swap_count(50, 200) == 100
    assert swap_count(0, 1000) == 0
    assert swap_count(1, 99) == 0


def test_zero_swaps_is_identity():
    net = assign_lambda_probabilities(preferential_attachment_graph(40, 2, 5), 0.4, 6)
    assert node_swap_variant(net, 0, 40, rng_seed=1) is net


def test_swap_of_symmetric_nodes_changes_nothing():
    arcs = [(u, v) for u in range(4) for v in range(4) if u != v]
    net = assign_uniform_probabilities(BaseGraph.from_arcs(4, arcs), 0.3)
    assert node_swap_variant(net, 100, 4, rng_seed=2).same_as(net)


def test_swap_negative_parameter():
    net = assign_uniform_probabilities(path_graph(3), 0.5)
    with pytest.raises(DomainError):
        node_swap_variant(net, -1, 3, rng_seed=0)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 25), st.integers(0, 300), st.integers(0, 2 ** 32))
def test_swaps_preserve_probability_multiset(n, s, seed):
    base = preferential_attachment_graph(max(n, 3), 1, rng_seed=seed % 97)
    net = assign_lambda_probabilities(base, 0.4, rng_seed=seed)
    moved = node_swap_variant(net, s, base.node_count, rng_seed=seed + 1)
    before, after = full_matrix(net), full_matrix(moved)
    assert np.array_equal(np.sort(before, axis=None), np.sort(after, axis=None))
    assert np.array_equal(np.sort(before.sum(axis=1)), np.sort(after.sum(axis=1)))


def test_replicate_identical_is_bitwise_equal():
    graph = preferential_attachment_graph(50, 2, 1)
    nets = replicate_for_advertisers(graph, 4, NetworkMode.IDENTICAL, GeneratorConfig(rng_seed=9))
    assert all(net.same_as(nets[0]) for net in nets)


def test_replicate_swapped_with_zero_s_is_identical():
    graph = preferential_attachment_graph(50, 2, 1)
    config = GeneratorConfig(swap_parameter=0, rng_seed=9)
    swapped = replicate_for_advertisers(graph, 3, NetworkMode.SWAPPED, config)
    identical = replicate_for_advertisers(graph, 3, NetworkMode.IDENTICAL, config)
    assert all(a.same_as(b) for a, b in zip(swapped, identical))


def test_replicate_independent_differs():
    graph = preferential_attachment_graph(50, 2, 1)
    nets = replicate_for_advertisers(graph, 3, NetworkMode.INDEPENDENT, GeneratorConfig(rng_seed=9))
    assert not nets[0].same_as(nets[1])
    assert not nets[1].same_as(nets[2])


def test_replicate_uniform_needs_p():
    with pytest.raises(DomainError):
        replicate_for_advertisers(path_graph(3), 2, NetworkMode.UNIFORM, GeneratorConfig())
    nets = replicate_for_advertisers(path_graph(3), 2, NetworkMode.UNIFORM, GeneratorConfig(uniform_p=1.0))
    assert np.all(nets[1].prob == 1.0)


def test_replicate_needs_an_advertiser():
    with pytest.raises(DomainError):
        replicate_for_advertisers(path_graph(3), 0, NetworkMode.IDENTICAL, GeneratorConfig())


def test_generator_config_ranges():
    with pytest.raises(DomainError):
        GeneratorConfig(lambda_max=2.0)
    with pytest.raises(DomainError):
        GeneratorConfig(uniform_p=-0.5)
    with pytest.raises(DomainError):
        GeneratorConfig(swap_parameter=-1)


def test_synthetic_builders():
    assert star_graph(4).edges == [(0, 1), (0, 2), (0, 3), (0, 4)]
    assert path_graph(4).arc_count == 6
    assert cycle_graph(5).arc_count == 10
    regular = random_regular_graph(20, 4, 3)
    assert set(regular.degrees().tolist()) == {4}


def test_graph_and_networks_from_config(tmp_path):
    config = Config()
    config.set('nodes', 40)
    config.set('m', 2)
    graph = graph_from_config(config)
    assert graph.node_count == 40
    nets = networks_from_config(config, graph)
    assert len(nets) == 2
    again = networks_from_config(config, graph_from_config(config))
    assert all(a.same_as(b) for a, b in zip(nets, again))

    path = tmp_path / "g.txt"
    path.write_text("0 1\n1 2\n")
    config.set('graph', str(path))
    assert graph_from_config(config).node_count == 3

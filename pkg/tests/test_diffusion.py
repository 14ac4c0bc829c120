import itertools

import numpy as np
import pytest

from conftest import network_from_arcs, random_network
from network.diffusion import (MAX_EXACT_ARCS, estimate_influence_mc, exact_influence, sample_reach_counts,
                               simulate_ic)
from network.generators import assign_uniform_probabilities, path_graph, preferential_attachment_graph
from utils.errors import CapacityError, DomainError


def hand_triangle_reach(p: float) -> float:
    """Expected reach of node 0 on the 3-cycle 0->1->2->0, summed over all 8 live-edge subgraphs."""
    total = 0.0
    for live01, live12, live20 in itertools.product([False, True], repeat=3):
        weight = 1.0
        for live in (live01, live12, live20):
            weight *= p if live else 1.0 - p
        reach = 1 + int(live01) + int(live01 and live12)
        total += weight * reach
    return total


def test_simulate_empty_seeds(triangle):
    outcome = simulate_ic(triangle, [], rng_seed=1)
    assert outcome.activated == frozenset()
    assert outcome.rounds == 0


def test_simulate_certain_arcs_reach_forward_set(chain):
    outcome = simulate_ic(chain, {1}, rng_seed=1)
    assert outcome.activated == frozenset({1, 2})
    assert outcome.rounds == 1
    assert simulate_ic(chain, {0}, rng_seed=1).rounds == 2


def test_simulate_zero_probabilities_keep_seeds():
    net = assign_uniform_probabilities(path_graph(5), 0.0)
    assert simulate_ic(net, {1, 3}, rng_seed=4).activated == frozenset({1, 3})


def test_simulate_seed_out_of_range(triangle):
    with pytest.raises(DomainError):
        simulate_ic(triangle, {3}, rng_seed=0)


def test_simulate_is_deterministic():
    net = assign_uniform_probabilities(preferential_attachment_graph(80, 2, 1), 0.2)
    assert simulate_ic(net, {0, 5}, 99) == simulate_ic(net, {0, 5}, 99)


def test_mc_empty_seeds_is_zero(triangle):
    estimate = estimate_influence_mc(triangle, [], 100, rng_seed=3)
    assert estimate.mean == 0.0
    assert estimate.stderr == 0.0


def test_mc_certain_connected_graph_reaches_everyone():
    net = assign_uniform_probabilities(preferential_attachment_graph(50, 2, 2), 1.0)
    estimate = estimate_influence_mc(net, {7}, 200, rng_seed=3)
    assert estimate.mean == 50.0


def test_mc_single_arc():
    net = network_from_arcs(2, [(0, 1, 0.5)])
    estimate = estimate_influence_mc(net, {0}, 100_000, rng_seed=8)
    assert abs(estimate.mean - 1.5) <= 3 * estimate.stderr


def test_mc_trials_domain(triangle):
    with pytest.raises(DomainError):
        estimate_influence_mc(triangle, {0}, 0, rng_seed=1)


def test_mc_is_independent_of_thread_count():
    net = assign_uniform_probabilities(preferential_attachment_graph(60, 2, 3), 0.1)
    single = sample_reach_counts(net, {0, 1}, 10_000, rng_seed=5, threads=1)
    pooled = sample_reach_counts(net, {0, 1}, 10_000, rng_seed=5, threads=4)
    assert np.array_equal(single, pooled)


def test_exact_single_arc_and_chain(chain):
    assert exact_influence(network_from_arcs(2, [(0, 1, 0.5)]), {0}) == pytest.approx(1.5)
    assert exact_influence(chain, {0}) == pytest.approx(3.0)
    assert exact_influence(chain, []) == 0.0


def test_exact_triangle_matches_hand_enumeration(triangle):
    assert exact_influence(triangle, {0}) == pytest.approx(hand_triangle_reach(0.5))
    assert exact_influence(triangle, {0}) == pytest.approx(1.75)


def test_exact_arc_limit():
    arcs = [(u, v, 0.5) for u in range(6) for v in range(6) if u != v]
    net = network_from_arcs(6, arcs)
    assert net.arc_count > MAX_EXACT_ARCS
    with pytest.raises(CapacityError):
        exact_influence(net, {0})


def test_exact_is_monotone_and_submodular(rng):
    for _ in range(5):
        net = random_network(rng, 5, 8)
        nodes = range(5)
        subsets = [frozenset(c) for size in range(6) for c in itertools.combinations(nodes, size)]
        value = {s: exact_influence(net, s) for s in subsets}
        for small in subsets:
            for big in subsets:
                if not small <= big:
                    continue
                assert value[small] <= value[big] + 1e-9
                for x in nodes:
                    if x in big:
                        continue
                    gain_small = value[small | {x}] - value[small]
                    gain_big = value[big | {x}] - value[big]
                    assert gain_small >= gain_big - 1e-9


@pytest.mark.slow
def test_mc_agrees_with_exact_oracle(rng):
    for _ in range(20):
        n = int(rng.integers(3, 7))
        net = random_network(rng, n, int(rng.integers(1, 21)))
        seeds = set(rng.choice(n, size=int(rng.integers(1, 3)), replace=False).tolist())
        estimate = estimate_influence_mc(net, seeds, 100_000, rng_seed=int(rng.integers(1 << 30)))
        exact = exact_influence(net, seeds)
        assert abs(estimate.mean - exact) <= 4 * max(estimate.stderr, 1e-12) + 1e-9

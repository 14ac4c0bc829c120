import math

import pandas as pd
import pytest

from conftest import brute_force_best, make_instance, network_from_arcs, random_network
from allocators.greedy import (TRACE_COLUMNS, greedy_allocate, greedy_guarantee, local_search_two_matroids,
                               penalty_greedy_allocate, penalty_guarantee, penalty_precondition_holds,
                               write_trace_csv)
from campaign.allocation import ConstraintSystem, is_feasible
from campaign.payoff import (ExactEstimator, RRSetEstimator, objective_revenue, penalty_objective)
from network.generators import assign_lambda_probabilities, preferential_attachment_graph
from network.rrsets import build_collections
from utils.errors import ConfigurationError, DomainError
from utils.streams import derive_seed


def isolated(n: int):
    return network_from_arcs(n, [])


def test_guarantees():
    assert greedy_guarantee(ConstraintSystem.uniform(3, 1, 2)) == 0.5
    assert greedy_guarantee(ConstraintSystem.uniform(3, 1, 2, [1, 1])) == pytest.approx(1 / 3)
    assert penalty_guarantee(0.0) == 0.5
    assert penalty_guarantee(1.0) == pytest.approx(0.4)
    with pytest.raises(DomainError):
        penalty_guarantee(2.0)


def test_greedy_stops_at_total_cap():
    net = isolated(5)
    instance = make_instance([net, net], total=3)
    alloc = greedy_allocate(instance, ExactEstimator([net, net]))
    assert len(alloc) == 3
    # equal gains: advertiser 0 first, then the lowest nodes
    assert [(e.node, e.advertiser) for e in alloc] == [(0, 0), (1, 0), (2, 0)]


def test_greedy_stops_without_positive_gain():
    net = isolated(4)
    instance = make_instance([net], total=4, budgets=[2.0])
    assert len(greedy_allocate(instance, ExactEstimator([net]))) == 2


def test_greedy_prefers_hub():
    net = network_from_arcs(5, [(0, i, 1.0) for i in range(1, 5)])
    instance = make_instance([net, net], total=2, budgets=[math.inf, 1.0])
    alloc = greedy_allocate(instance, ExactEstimator([net, net]))
    assert (0, 0) in [(e.node, e.advertiser) for e in alloc]
    assert is_feasible(instance.constraints, alloc)


def test_lazy_matches_naive(small_instances):
    for instance in small_instances[:40]:
        estimator = ExactEstimator(instance.networks)
        assert greedy_allocate(instance, estimator, lazy=True) == greedy_allocate(instance, estimator, lazy=False)


def test_lazy_matches_naive_on_rr_sets():
    graph = preferential_attachment_graph(150, 2, 4)
    nets = [assign_lambda_probabilities(graph, 0.4, derive_seed(8, j)) for j in range(3)]
    estimator = RRSetEstimator(build_collections(nets, 1500, rng_seed=9))
    instance = make_instance(nets, total=15, budgets=[20.0, 30.0, math.inf])
    assert greedy_allocate(instance, estimator, lazy=True) == greedy_allocate(instance, estimator, lazy=False)


def test_greedy_half_of_optimum(small_instances):
    for instance in small_instances:
        estimator = ExactEstimator(instance.networks)
        alloc = greedy_allocate(instance, estimator)
        assert is_feasible(instance.constraints, alloc)
        value = objective_revenue(instance, alloc, estimator)
        best = brute_force_best(instance, lambda a: objective_revenue(instance, a, estimator))
        assert value >= 0.5 * best - 1e-9


def test_greedy_trace(tmp_path):
    net = network_from_arcs(4, [(0, 1, 0.5), (2, 3, 0.5)])
    instance = make_instance([net], total=2)
    trace = []
    greedy_allocate(instance, ExactEstimator([net]), trace=trace)
    path = tmp_path / "trace.csv"
    write_trace_csv(trace, str(path))
    frame = pd.read_csv(path)
    assert list(frame.columns) == TRACE_COLUMNS
    assert frame['round'].tolist() == [1, 2]
    assert frame['node'].tolist() == [0, 2]
    assert frame['objective'].tolist() == pytest.approx([1.5, 3.0])
    assert (frame['gain'] > 0).all()


def test_penalty_greedy_stops_before_overshoot():
    net = isolated(5)
    instance = make_instance([net], total=5, budgets=[2.5])
    estimator = ExactEstimator([net])
    assert len(greedy_allocate(instance, estimator)) == 3
    alloc = penalty_greedy_allocate(instance, estimator, beta=1.0)
    assert len(alloc) == 2
    assert penalty_objective(instance, alloc, estimator, 1.0) == pytest.approx(2.0)


def test_penalty_greedy_with_zero_beta_is_plain_greedy(small_instances):
    for instance in small_instances[:20]:
        estimator = ExactEstimator(instance.networks)
        assert (penalty_greedy_allocate(instance, estimator, 0.0)
                == greedy_allocate(instance, estimator, lazy=False))


def test_penalty_greedy_rejects_beta(chain):
    instance = make_instance([chain], total=1)
    with pytest.raises(DomainError):
        penalty_greedy_allocate(instance, ExactEstimator([chain]), beta=-0.1)


def test_penalty_precondition(chain):
    assert penalty_precondition_holds(make_instance([chain], total=1, budgets=[3.0]), ExactEstimator([chain]))
    assert not penalty_precondition_holds(make_instance([chain], total=1, budgets=[2.0]),
                                          ExactEstimator([chain]))


@pytest.mark.parametrize("beta", [0.25, 0.5, 1.0])
def test_penalty_greedy_guarantee(small_instances, beta):
    checked = 0
    for instance in small_instances:
        estimator = ExactEstimator(instance.networks)
        if not penalty_precondition_holds(instance, estimator):
            continue
        alloc = penalty_greedy_allocate(instance, estimator, beta)
        value = penalty_objective(instance, alloc, estimator, beta)
        best = brute_force_best(instance, lambda a: penalty_objective(instance, a, estimator, beta))
        assert value >= penalty_guarantee(beta) * best - 1e-9
        checked += 1
    assert checked > 0


def two_matroid_instances(rng, count):
    instances = []
    for _ in range(count):
        n = int(rng.integers(3, 6))
        nets = [random_network(rng, n, int(rng.integers(1, 2 * n))) for _ in range(2)]
        budgets = [float(rng.choice([1.5, 2.5, math.inf])) for _ in range(2)]
        instances.append(make_instance(nets, int(rng.integers(1, 4)), int(rng.integers(1, 3)),
                                       budgets, caps=[1, 1]))
    return instances


def test_local_search_guarantee(rng):
    epsilon = 0.1
    for instance in two_matroid_instances(rng, 40):
        estimator = ExactEstimator(instance.networks)
        alloc = local_search_two_matroids(instance, estimator, epsilon)
        assert is_feasible(instance.constraints, alloc)
        value = objective_revenue(instance, alloc, estimator)
        best = brute_force_best(instance, lambda a: objective_revenue(instance, a, estimator))
        assert value >= best / (2 + epsilon) - 1e-9
        start = objective_revenue(instance, greedy_allocate(instance, estimator), estimator)
        assert value >= start - 1e-9


def test_local_search_keeps_greedy_when_no_single_exchange_helps():
    # the better pair needs two exchanges, each of which loses value alone
    a = network_from_arcs(7, [(0, 1, 1.0), (0, 2, 1.0), (3, 4, 1.0), (5, 6, 1.0)])
    b = network_from_arcs(7, [(0, 1, 1.0), (0, 2, 1.0)])
    instance = make_instance([a, b], total=2, caps=[1, 1])
    estimator = ExactEstimator([a, b])
    greedy = greedy_allocate(instance, estimator)
    assert objective_revenue(instance, greedy, estimator) == pytest.approx(4.0)
    assert local_search_two_matroids(instance, estimator) == greedy


def test_local_search_needs_caps(chain):
    instance = make_instance([chain], total=2)
    with pytest.raises(ConfigurationError):
        local_search_two_matroids(instance, ExactEstimator([chain]))
    capped = make_instance([chain], total=2, caps=[1])
    with pytest.raises(ConfigurationError):
        local_search_two_matroids(capped, ExactEstimator([chain]), epsilon=0.0)

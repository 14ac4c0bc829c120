import itertools
import math

import pytest

from conftest import make_instance, network_from_arcs, random_network
from campaign.allocation import Allocation, ConstraintSystem, GroundElement
from campaign.payoff import (AdvertiserProfile, CappedLinearValue, ExactEstimator, MonteCarloEstimator,
                             Objective, ProblemInstance, RRSetEstimator, ValueFunction, advertiser_payoff,
                             build_instance, check_value_function, marginal_gain,
                             objective_expected_revenue, objective_revenue, overshoot_report,
                             penalty_objective, quantize_gain, value_capped_linear)
from network.generators import assign_uniform_probabilities, preferential_attachment_graph
from network.rrsets import build_collections
from utils.config import Config
from utils.errors import ConfigurationError, ContractViolation, DomainError


def star_network(leaves: int, p: float = 1.0):
    return network_from_arcs(leaves + 1, [(0, i, p) for i in range(1, leaves + 1)])


def test_value_capped_linear():
    assert value_capped_linear(AdvertiserProfile(10.0, 1.0), 4.0) == 4.0
    assert value_capped_linear(AdvertiserProfile(10.0, 1.0), 14.0) == 10.0
    n, m = 12, 4
    assert value_capped_linear(AdvertiserProfile(n / m, 1.0), n) == pytest.approx(n / m)
    with pytest.raises(DomainError):
        value_capped_linear(AdvertiserProfile(), -1.0)


def test_profile_ranges():
    with pytest.raises(DomainError):
        AdvertiserProfile(budget=-1.0)
    with pytest.raises(DomainError):
        AdvertiserProfile(price=0.0)
    with pytest.raises(DomainError):
        AdvertiserProfile(seed_cap=-1)


def test_value_function_contract():
    check_value_function(CappedLinearValue(2.0, 1.0))

    class Convex(ValueFunction):
        def __call__(self, reach):
            return reach ** 2

    with pytest.raises(ContractViolation):
        check_value_function(Convex())

    net = star_network(2)
    constraints = ConstraintSystem.uniform(3, 1, 1)
    with pytest.raises(ContractViolation):
        ProblemInstance([net], [AdvertiserProfile()], constraints, [Convex()])
    instance = ProblemInstance([net], [AdvertiserProfile()], constraints, [CappedLinearValue(2.0, 1.0)])
    assert instance.value_functions[0].budget() == 2.0


def test_revenue_examples():
    net = star_network(5, 0.5)
    instance = make_instance([net], total=2)
    estimator = ExactEstimator([net])
    assert objective_revenue(instance, Allocation(), estimator) == 0.0
    # unbounded budget: revenue is the expected reach
    assert objective_revenue(instance, Allocation.from_pairs([(0, 0)]), estimator) == pytest.approx(3.5)


def test_star_with_budgets_pays_n_over_m():
    leaves, m = 11, 4
    n = leaves + 1
    nets = [star_network(leaves)] * m
    instance = make_instance(nets, total=1, budgets=[n / m] * m)
    revenue = objective_revenue(instance, Allocation.from_pairs([(0, 0)]), ExactEstimator(nets))
    assert revenue == pytest.approx(n / m)


def test_revenue_rejects_infeasible():
    net = star_network(3)
    instance = make_instance([net], total=1)
    with pytest.raises(ContractViolation):
        objective_revenue(instance, Allocation.from_pairs([(0, 0), (1, 0)]), ExactEstimator([net]))


def test_expected_revenue_caps_each_cascade():
    net = network_from_arcs(2, [(0, 1, 0.5)])
    alloc = Allocation.from_pairs([(0, 0)])
    capped_at_one = make_instance([net], total=1, budgets=[1.0])
    assert objective_expected_revenue(capped_at_one, alloc, 1000, rng_seed=1) == pytest.approx(1.0)

    instance = make_instance([net], total=1, budgets=[1.2])
    w = objective_expected_revenue(instance, alloc, 100_000, rng_seed=2)
    assert w == pytest.approx(1.1, abs=0.005)
    assert objective_revenue(instance, alloc, ExactEstimator([net])) == pytest.approx(1.2)
    assert objective_expected_revenue(instance, Allocation(), 10, rng_seed=2) == 0.0


def test_expected_revenue_matches_revenue_on_deterministic_network(chain):
    instance = make_instance([chain, chain], total=2, budgets=[2.0, math.inf])
    alloc = Allocation.from_pairs([(0, 0), (1, 1)])
    exact = objective_revenue(instance, alloc, ExactEstimator([chain, chain]))
    assert objective_expected_revenue(instance, alloc, 50, rng_seed=3) == exact == 4.0


def test_penalty_examples():
    net = star_network(13)
    instance = make_instance([net], total=1, budgets=[10.0])
    alloc = Allocation.from_pairs([(0, 0)])
    estimator = ExactEstimator([net])
    assert penalty_objective(instance, alloc, estimator, 0.5) == pytest.approx(8.0)
    assert penalty_objective(instance, alloc, estimator, 0.0) == objective_revenue(instance, alloc, estimator)
    with pytest.raises(DomainError):
        penalty_objective(instance, alloc, estimator, 1.5)

    roomy = make_instance([net], total=1, budgets=[20.0])
    assert penalty_objective(roomy, alloc, estimator, 1.0) == objective_revenue(roomy, alloc, estimator)


def test_penalty_with_zero_beta_is_bit_identical(rng):
    nets = [random_network(rng, 5, 8) for _ in range(2)]
    instance = make_instance(nets, total=3, budgets=[1.7, 2.2])
    estimator = MonteCarloEstimator(nets, 500, rng_seed=4)
    alloc = Allocation.from_pairs([(0, 0), (1, 1), (3, 0)])
    assert penalty_objective(instance, alloc, estimator, 0.0) == objective_revenue(instance, alloc, estimator)


def test_marginal_gain_examples():
    net = star_network(4, 0.5)
    instance = make_instance([net, net], total=3, exposure=2, budgets=[math.inf, 1.0])
    estimator = ExactEstimator([net, net])
    first = marginal_gain(instance, Allocation(), GroundElement(0, 0), Objective.REVENUE, estimator)
    assert first == pytest.approx(3.0)

    capped = Allocation.from_pairs([(0, 1)])
    assert marginal_gain(instance, capped, GroundElement(1, 1), Objective.REVENUE, estimator) == 0.0

    with pytest.raises(ContractViolation):
        marginal_gain(instance, capped, GroundElement(0, 1), Objective.REVENUE, estimator)


def test_penalty_gain_can_be_negative():
    net = network_from_arcs(2, [])
    instance = make_instance([net], total=2, budgets=[1.0])
    estimator = ExactEstimator([net])
    start = Allocation.from_pairs([(0, 0)])
    gain = marginal_gain(instance, start, GroundElement(1, 0), Objective.PENALTY, estimator, beta=1.0)
    assert gain == pytest.approx(-1.0)


def _ground(instance):
    return [GroundElement(v, j) for j in range(instance.m) for v in range(instance.n)]


def test_revenue_is_monotone_and_submodular(rng):
    for _ in range(5):
        nets = [random_network(rng, 4, 5) for _ in range(2)]
        instance = make_instance(nets, total=8, exposure=2, budgets=[1.5, math.inf])
        estimator = ExactEstimator(nets)
        ground = _ground(instance)
        subsets = [frozenset(c) for size in range(4) for c in itertools.combinations(ground, size)]
        value = {s: objective_revenue(instance, Allocation(s), estimator) for s in subsets}
        for small in subsets:
            for big in subsets:
                if not small <= big or len(big) > 2:
                    continue
                assert value[small] <= value[big] + 1e-9
                for x in ground:
                    if x in big:
                        continue
                    gain_small = value[small | {x}] - value[small]
                    gain_big = value[big | {x}] - value[big]
                    assert gain_small >= gain_big - 1e-9


def test_penalty_payoff_is_positively_submodular(rng):
    for _ in range(10):
        net = random_network(rng, 4, 6)
        fn = CappedLinearValue(float(rng.choice([1.5, 2.0, 2.5])), 1.0)
        estimator = ExactEstimator([net])
        beta = float(rng.choice([0.25, 0.5, 1.0]))

        def payoff(seeds):
            return advertiser_payoff(fn, estimator.reach(0, seeds) if seeds else 0.0, beta)

        subsets = [frozenset(c) for size in range(5) for c in itertools.combinations(range(4), size)]
        for small in subsets:
            for big in subsets:
                if not small <= big:
                    continue
                for x in set(range(4)) - big:
                    gain_small = payoff(small | {x}) - payoff(small)
                    if gain_small >= 0:
                        assert gain_small >= payoff(big | {x}) - payoff(big) - 1e-9


def test_rr_session_matches_estimator():
    net = assign_uniform_probabilities(preferential_attachment_graph(60, 2, 3), 0.2)
    estimator = RRSetEstimator(build_collections([net], 600, rng_seed=5))
    session = estimator.session()
    seeds = set()
    for node in (4, 9, 4, 17):
        expected = estimator.reach(0, seeds | {node})
        assert session.reach_with(0, node) == pytest.approx(expected)
        session.add(0, node)
        seeds.add(node)
        assert session.reaches[0] == pytest.approx(expected)


def test_monte_carlo_estimator_uses_common_samples():
    net = network_from_arcs(3, [(0, 1, 0.5), (1, 2, 0.5)])
    estimator = MonteCarloEstimator([net], 2000, rng_seed=6)
    assert estimator.reach(0, {0}) == estimator.reach(0, [0])
    assert estimator.reach(0, {0, 1}) >= estimator.reach(0, {0})


def test_overshoot_report():
    net = network_from_arcs(3, [])
    instance = make_instance([net, net], total=3, budgets=[1.0, 5.0])
    alloc = Allocation.from_pairs([(0, 0), (1, 0), (2, 1)])
    report = overshoot_report(instance, alloc, ExactEstimator([net, net]))
    assert report['overshoot'].tolist() == [1.0, 0.0]
    assert report['seeds'].tolist() == [2, 1]


def test_quantize_gain_merges_float_noise():
    assert quantize_gain(0.1 + 0.2) == quantize_gain(0.3)


def test_build_instance_from_config(chain):
    config = Config()
    config.set('budgets', [5.0, 7.0])
    config.set('prices', 2.0)
    config.set('seed_caps', 1)
    config.set('exposure_bound', 2)
    instance = build_instance(config, [chain, chain])
    assert [p.budget for p in instance.profiles] == [5.0, 7.0]
    assert [p.price for p in instance.profiles] == [2.0, 2.0]
    assert instance.constraints.advertiser_caps.tolist() == [1, 1]
    assert instance.constraints.total_cap == 20
    assert instance.constraints.exposure_bounds.tolist() == [2, 2, 2]

    config.set('budgets', [1.0, 2.0, 3.0])
    with pytest.raises(ConfigurationError):
        build_instance(config, [chain, chain])


def test_build_instance_defaults_to_unbounded_budgets(chain):
    instance = build_instance(Config(), [chain])
    assert instance.profiles[0].budget == math.inf
    assert not instance.constraints.has_caps
    assert instance.graph is chain.base

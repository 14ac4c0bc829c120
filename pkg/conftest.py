"""
Shared test factories.
Small hand-built networks and instances, plus brute-force enumeration of feasible allocations.
"""

import itertools
import math
from typing import Callable, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import pytest

from campaign.allocation import Allocation, ConstraintSystem, GroundElement, is_feasible
from campaign.payoff import AdvertiserProfile, ProblemInstance
from network.graph import BaseGraph, InfluenceNetwork


def network_from_arcs(n: int, arcs: Sequence[Tuple[int, int, float]]) -> InfluenceNetwork:
    """Directed network from (u, v, p) triples."""
    probs = {(u, v): p for u, v, p in arcs}
    graph = BaseGraph.from_arcs(n, list(probs), directed=True)
    return InfluenceNetwork.from_probabilities(graph, np.array([probs[e] for e in graph.edges]))


def random_network(rng: np.random.Generator, n: int, arc_count: int,
                   choices: Sequence[float] = (0.2, 0.5, 0.8, 1.0)) -> InfluenceNetwork:
    """Random directed network with probabilities drawn from a few values."""
    pairs = [(u, v) for u in range(n) for v in range(n) if u != v]
    picked = rng.choice(len(pairs), size=min(arc_count, len(pairs)), replace=False)
    return network_from_arcs(n, [(*pairs[i], float(rng.choice(choices))) for i in picked])


def make_instance(networks: Sequence[InfluenceNetwork], total: int, exposure: int = 1,
                  budgets: Optional[Sequence[float]] = None, prices: Optional[Sequence[float]] = None,
                  caps: Optional[Sequence[int]] = None) -> ProblemInstance:
    """Instance with uniform exposure bounds."""
    m, n = len(networks), networks[0].node_count
    budgets = [math.inf] * m if budgets is None else budgets
    prices = [1.0] * m if prices is None else prices
    profiles = [AdvertiserProfile(budgets[j], prices[j], None if caps is None else caps[j])
                for j in range(m)]
    return ProblemInstance(networks, profiles, ConstraintSystem.uniform(n, exposure, total, caps))


def feasible_allocations(instance: ProblemInstance) -> Iterator[Allocation]:
    """Every feasible allocation, by increasing size."""
    ground = [GroundElement(v, j) for j in range(instance.m) for v in range(instance.n)]
    limit = min(instance.constraints.total_cap, len(ground))
    for size in range(limit + 1):
        for combo in itertools.combinations(ground, size):
            alloc = Allocation(combo)
            if is_feasible(instance.constraints, alloc):
                yield alloc


def brute_force_best(instance: ProblemInstance, objective: Callable[[Allocation], float]) -> float:
    """Largest objective value over all feasible allocations."""
    return max(objective(alloc) for alloc in feasible_allocations(instance))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def triangle() -> InfluenceNetwork:
    """Directed 3-cycle with p = 0.5 on every arc."""
    return network_from_arcs(3, [(0, 1, 0.5), (1, 2, 0.5), (2, 0, 0.5)])


@pytest.fixture
def chain() -> InfluenceNetwork:
    """0 -> 1 -> 2 with certain arcs."""
    return network_from_arcs(3, [(0, 1, 1.0), (1, 2, 1.0)])


@pytest.fixture
def small_instances() -> List[ProblemInstance]:
    """Enumerable instances: n <= 6, m <= 2, K <= 3, mixed budgets."""
    generator = np.random.default_rng(7)
    instances = []
    for i in range(100):
        n = int(generator.integers(3, 7))
        m = int(generator.integers(1, 3))
        networks = [random_network(generator, n, int(generator.integers(1, 2 * n))) for _ in range(m)]
        budgets = [float(generator.choice([1.5, 2.5, math.inf])) for _ in range(m)]
        exposure = int(generator.integers(1, 3))
        instances.append(make_instance(networks, int(generator.integers(1, 4)), exposure, budgets))
    return instances

"""
Greedy allocators.
Lazy matroid greedy, penalty-aware greedy and two-matroid local search.
"""

import heapq
import itertools
import logging
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from campaign.allocation import Allocation, ConstraintSystem, GroundElement, constraint_matroids
from campaign.payoff import (ProblemInstance, ReachEstimator, check_beta,
                             advertiser_payoff, advertiser_reaches, quantize_gain)
from utils.errors import ConfigurationError

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ['round', 'node', 'advertiser', 'gain', 'objective']


def greedy_guarantee(constraints: ConstraintSystem) -> float:
    """Approximation factor: 1/2 for one matroid, 1/3 with advertiser caps."""
    return 1.0 / 3.0 if constraints.has_caps else 0.5


def penalty_guarantee(beta: float) -> float:
    """(1 + beta) / (2 + 3 beta)."""
    check_beta(beta)
    return (1.0 + beta) / (2.0 + 3.0 * beta)


class _GreedyState:
    """Growing allocation with its matroid counters and reach session."""

    def __init__(self, instance: ProblemInstance, estimator: ReachEstimator, beta: float):
        self.instance = instance
        self.beta = beta
        self.counters = [mat.matroid_counter()
                         for mat in constraint_matroids(instance.constraints, instance.n, instance.m)]
        self.session = estimator.session()
        self.payoffs = np.zeros(instance.m, dtype=np.float64)
        self.selected: List[GroundElement] = []

    def can_add(self, element: GroundElement) -> bool:
        return all(counter.can_add(element) for counter in self.counters)

    def gain(self, element: GroundElement) -> float:
        j = element.advertiser
        reach = self.session.reach_with(j, element.node)
        payoff = advertiser_payoff(self.instance.value_functions[j], reach, self.beta)
        return quantize_gain(payoff - self.payoffs[j])

    def add(self, element: GroundElement) -> None:
        j = element.advertiser
        self.session.add(j, element.node)
        self.payoffs[j] = advertiser_payoff(self.instance.value_functions[j],
                                            float(self.session.reaches[j]), self.beta)
        for counter in self.counters:
            counter.add(element)
        self.selected.append(element)

    @property
    def full(self) -> bool:
        return len(self.selected) >= self.instance.constraints.total_cap

    def record(self, trace: Optional[List[Dict]], gain: float) -> None:
        if trace is None:
            return
        element = self.selected[-1]
        trace.append({'round': len(self.selected), 'node': element.node,
                      'advertiser': element.advertiser, 'gain': gain,
                      'objective': float(self.payoffs.sum())})

    def allocation(self) -> Allocation:
        return Allocation(self.selected)


def _ground(instance: ProblemInstance) -> List[GroundElement]:
    """Ground set in tie-break order: advertiser, then node."""
    return [GroundElement(v, j) for j in range(instance.m) for v in range(instance.n)]


def _naive_greedy(state: _GreedyState, trace: Optional[List[Dict]]) -> Allocation:
    """Re-evaluate every feasible element each round."""
    candidates = _ground(state.instance)
    while not state.full:
        candidates = [e for e in candidates if state.can_add(e)]
        best, best_gain = None, 0.0
        for element in candidates:
            gain = state.gain(element)
            if gain > best_gain:
                best, best_gain = element, gain
        if best is None:
            break
        state.add(best)
        state.record(trace, best_gain)
        candidates.remove(best)
    return state.allocation()


def _lazy_greedy(state: _GreedyState, trace: Optional[List[Dict]]) -> Allocation:
    """Max-heap of stale gains, refreshed on pop."""
    heap = [(-state.gain(e), e.advertiser, e.node, 0) for e in _ground(state.instance)]
    heapq.heapify(heap)
    round_no = 0

    while heap and not state.full:
        neg_gain, j, v, stamp = heapq.heappop(heap)
        element = GroundElement(v, j)
        if not state.can_add(element):
            continue  # independence is downward closed, so it never returns
        if stamp == round_no:
            if -neg_gain <= 0:
                break
            state.add(element)
            state.record(trace, -neg_gain)
            round_no += 1
        else:
            heapq.heappush(heap, (-state.gain(element), j, v, round_no))
    return state.allocation()


def greedy_allocate(instance: ProblemInstance, estimator: ReachEstimator, lazy: bool = True,
                    trace: Optional[List[Dict]] = None) -> Allocation:
    """
    Matroid greedy on the revenue objective.

    Adds the feasible element of largest marginal revenue until no element
    has positive gain or K elements are chosen. Equal gains go to the
    smaller advertiser, then the smaller node.
    """
    state = _GreedyState(instance, estimator, 0.0)
    alloc = _lazy_greedy(state, trace) if lazy else _naive_greedy(state, trace)
    logger.info("greedy chose %d seeds, revenue %.4f", len(alloc), float(state.payoffs.sum()))
    return alloc


def penalty_precondition_holds(instance: ProblemInstance, estimator: ReachEstimator) -> bool:
    """No single seed's exposure value exceeds its advertiser's budget."""
    for j, fn in enumerate(instance.value_functions):
        budget = fn.budget()
        for v in range(instance.n):
            if fn.exposure_value(estimator.reach(j, {v})) > budget:
                return False
    return True


def penalty_greedy_allocate(instance: ProblemInstance, estimator: ReachEstimator, beta: float,
                            trace: Optional[List[Dict]] = None) -> Allocation:
    """Greedy on the penalty objective; stops before any element with gain <= 0."""
    check_beta(beta)
    if beta and not penalty_precondition_holds(instance, estimator):
        logger.warning("some single seed exceeds an advertiser budget; "
                       "the %.3f approximation guarantee does not apply", penalty_guarantee(beta))
    state = _GreedyState(instance, estimator, beta)
    alloc = _naive_greedy(state, trace)
    logger.info("penalty greedy (beta=%.3f) chose %d seeds, objective %.4f",
                beta, len(alloc), float(state.payoffs.sum()))
    return alloc


class _SwapEvaluator:
    """Revenue of neighboring allocations, recomputing only changed advertisers."""

    def __init__(self, instance: ProblemInstance, estimator: ReachEstimator, alloc: Allocation):
        self.instance = instance
        self.estimator = estimator
        self.constraints = instance.constraints
        self.reset(alloc)

    def reset(self, alloc: Allocation) -> None:
        self.alloc = alloc
        self.seeds = [set(s) for s in alloc.per_advertiser(self.instance.m)]
        reaches = advertiser_reaches(self.instance, alloc, self.estimator)
        self.values = [fn(r) for fn, r in zip(self.instance.value_functions, reaches.tolist())]
        self.value = float(sum(self.values))
        self.node_load = np.zeros(self.instance.n, dtype=np.int64)
        self.adv_load = np.zeros(self.instance.m, dtype=np.int64)
        for e in alloc.elements:
            self.node_load[e.node] += 1
            self.adv_load[e.advertiser] += 1

    def feasible(self, add: GroundElement, removed) -> bool:
        if len(self.alloc) - len(removed) + 1 > self.constraints.total_cap:
            return False
        node_load = self.node_load[add.node] + 1 - sum(1 for e in removed if e.node == add.node)
        if node_load > self.constraints.exposure_bounds[add.node]:
            return False
        caps = self.constraints.advertiser_caps
        adv_load = self.adv_load[add.advertiser] + 1 - sum(1 for e in removed if e.advertiser == add.advertiser)
        return adv_load <= caps[add.advertiser]

    def value_after(self, add: GroundElement, removed) -> float:
        touched = {add.advertiser} | {e.advertiser for e in removed}
        total = self.value
        for j in touched:
            seeds = set(self.seeds[j])
            seeds.difference_update(e.node for e in removed if e.advertiser == j)
            if j == add.advertiser:
                seeds.add(add.node)
            reach = self.estimator.reach(j, seeds) if seeds else 0.0
            total += self.instance.value_functions[j](reach) - self.values[j]
        return total


def local_search_two_matroids(instance: ProblemInstance, estimator: ReachEstimator,
                              epsilon: float = 0.1) -> Allocation:
    """
    Local search over the intersection of the exposure and advertiser matroids.

    Starts from greedy and applies the first improving move found: add one
    element, or swap one element in for up to two out. A move is taken only
    if the revenue grows by a factor of at least (1 + epsilon / |ground|).
    """
    if not instance.constraints.has_caps:
        logger.warning("without advertiser caps greedy already carries the stronger guarantee; "
                       "use greedy_allocate")
        raise ConfigurationError("local search needs per-advertiser seed caps")
    if epsilon <= 0:
        raise ConfigurationError(f"epsilon must be positive, got {epsilon}")

    ground = _ground(instance)
    factor = 1.0 + epsilon / len(ground)
    evaluator = _SwapEvaluator(instance, estimator, greedy_allocate(instance, estimator))
    start_value = evaluator.value
    moves = 0

    def improves(new: float, old: float) -> bool:
        return new > old and new >= factor * old

    improved = True
    while improved:
        improved = False
        current = evaluator.alloc.sorted_elements()
        outside = [e for e in ground if e not in evaluator.alloc]
        removals = [()] + [(e,) for e in current] + list(itertools.combinations(current, 2))
        for add in outside:
            for removed in removals:
                if not evaluator.feasible(add, removed):
                    continue
                if improves(evaluator.value_after(add, removed), evaluator.value):
                    evaluator.reset(evaluator.alloc.without(*removed).with_element(add))
                    moves += 1
                    improved = True
                    break
            if improved:
                break

    logger.info("local search made %d moves, revenue %.4f -> %.4f", moves, start_value, evaluator.value)
    return evaluator.alloc


def trace_frame(trace: List[Dict]) -> pd.DataFrame:
    """Trace rows as a table."""
    return pd.DataFrame(trace, columns=TRACE_COLUMNS)


def write_trace_csv(trace: List[Dict], path: str) -> None:
    """Write round, node, advertiser, gain, objective rows."""
    trace_frame(trace).to_csv(path, index=False)

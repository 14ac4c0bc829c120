"""
Experiment harness.
Desk-scale studies of estimation accuracy, payoff against K, m, competition and edge probability,
and parallel scalability. Every study returns a DataFrame.
"""

import logging
import math
import time
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from allocators.greedy import (greedy_allocate, local_search_two_matroids,
                               penalty_greedy_allocate)
from allocators.heuristics import eigen_centrality_allocate, max_degree_allocate
from allocators.lp import LPSolution, build_lp, solve_lp
from allocators.rounding import round_solution
from bench.reporting import allocation_digest
from campaign.allocation import Allocation, ConstraintSystem
from campaign.payoff import ProblemInstance, RRSetEstimator, build_instance, objective_revenue
from network.generators import NetworkMode, networks_from_config
from network.graph import BaseGraph, InfluenceNetwork
from network.rrsets import (RRCollection, build_collections, default_sample_count,
                            theoretical_sample_count)
from utils.config import Config
from utils.errors import ConfigurationError
from utils.streams import STREAM_ROUNDING, STREAM_RR, derive_seed

logger = logging.getLogger(__name__)

ALGORITHMS = ('greedy', 'penalty-greedy', 'local-search', 'lp-round', 'max-degree', 'eigen')
K_ALGORITHMS = ('greedy', 'lp-round', 'max-degree', 'eigen')

# RR stream tags
TAG_MAIN = 0
TAG_REFERENCE = 1
TAG_QUALITY = 2
TAG_REDRAW = 3
TAG_ANCHOR = 4


def sample_collections(config: Config, networks: Sequence[InfluenceNetwork], multiplier: Optional[int] = None,
                       shared: bool = False, tag: int = TAG_MAIN, *keys: int) -> List[RRCollection]:
    """RR collections of multiplier * n sets per advertiser (rho_mult by default)."""
    n = networks[0].node_count
    multiplier = config.get_int('rho_mult') if multiplier is None else multiplier
    rng_seed = derive_seed(config.get_int('seed'), STREAM_RR, tag, *keys)
    return build_collections(networks, default_sample_count(n, multiplier), rng_seed,
                             config.get_int('threads', 1), shared, config.get('parallel_backend'))


def run_algorithm(name: str, instance: ProblemInstance, collections: Sequence[RRCollection],
                  config: Config, solution: Optional[LPSolution] = None,
                  trace: Optional[List[Dict]] = None) -> Tuple[Allocation, Optional[float]]:
    """Run one allocator on RR-estimated reach; returns the allocation and OPT_LP when solved."""
    estimator = RRSetEstimator(collections)
    if name == 'greedy':
        return greedy_allocate(instance, estimator, trace=trace), None
    if name == 'penalty-greedy':
        return penalty_greedy_allocate(instance, estimator, config.get_float('beta'), trace), None
    if name == 'local-search':
        return local_search_two_matroids(instance, estimator, config.get_float('epsilon')), None
    if name == 'lp-round':
        if solution is None:
            solution = solve_lp(build_lp(instance, collections), config.get('lp_solver'))
        alloc = round_solution(solution, derive_seed(config.get_int('seed'), STREAM_ROUNDING))
        return alloc, solution.objective
    if name == 'max-degree':
        return max_degree_allocate(instance), None
    if name == 'eigen':
        return eigen_centrality_allocate(instance), None
    raise ConfigurationError(f"unknown algorithm '{name}' (choose from {', '.join(ALGORITHMS)})")


def _with_total(instance: ProblemInstance, total: int) -> ProblemInstance:
    """Instance with another total seed cap."""
    constraints = instance.constraints
    return instance.with_constraints(ConstraintSystem(constraints.exposure_bounds, total,
                                                      constraints.advertiser_caps))


def _scenario(config: Config, **overrides) -> Config:
    """Copy of config with some keys replaced."""
    scenario = config.copy()
    for key, value in overrides.items():
        scenario.set(key, value)
    return scenario


def run_calibration(config: Config, graph: BaseGraph, multipliers: Sequence[int], repetitions: int,
                    reference_multiplier: int = 200, quality_multiplier: int = 100) -> pd.DataFrame:
    """
    Accuracy of RR estimation as a function of the sample multiplier.

    mean_abs_error: absolute error of a fixed allocation's estimated total
    payoff against the reference multiplier, over the reference payoff,
    averaged over redraws. The anchor allocation is picked by greedy on its
    own sample, independent of the reference it is scored against.
    The error shrinks with the share of the graph the anchor reaches; at
    multiplier 10 it stays under 2% once the advertisers together reach
    three quarters of the nodes.
    normalized_std: spread of those estimates over their mean.
    greedy_quality: payoff of greedy run at the multiplier over greedy run
    at the quality multiplier, both evaluated on the reference samples.
    """
    networks = networks_from_config(config, graph)
    instance = build_instance(config, networks, graph)
    n = instance.n

    reference = RRSetEstimator(sample_collections(config, networks, reference_multiplier, False, TAG_REFERENCE))
    anchor = greedy_allocate(
        instance, RRSetEstimator(sample_collections(config, networks, reference_multiplier, False, TAG_ANCHOR)))
    anchor_payoff = objective_revenue(instance, anchor, reference)
    quality_alloc = greedy_allocate(
        instance, RRSetEstimator(sample_collections(config, networks, quality_multiplier, False, TAG_QUALITY)))
    quality_payoff = objective_revenue(instance, quality_alloc, reference)
    worst_case = theoretical_sample_count(n, instance.m, instance.constraints.total_cap,
                                          max(anchor_payoff, 1.0), config.get_float('epsilon'))

    rows = []
    for multiplier in multipliers:
        estimates = []
        first: Optional[List[RRCollection]] = None
        for rep in range(repetitions):
            collections = sample_collections(config, networks, multiplier, False, TAG_REDRAW, multiplier, rep)
            if first is None:
                first = collections
            estimates.append(objective_revenue(instance, anchor, RRSetEstimator(collections)))
        estimates = np.asarray(estimates)
        greedy_payoff = objective_revenue(instance, greedy_allocate(instance, RRSetEstimator(first)), reference)
        rows.append({
            'multiplier': multiplier,
            'rho': default_sample_count(n, multiplier),
            'mean_abs_error': float(np.mean(np.abs(estimates - anchor_payoff)) / anchor_payoff)
            if anchor_payoff > 0 else 0.0,
            'normalized_std': float(np.std(estimates, ddof=1) / np.mean(estimates))
            if repetitions > 1 and np.mean(estimates) > 0 else 0.0,
            'greedy_quality': greedy_payoff / quality_payoff if quality_payoff > 0 else 1.0,
            'worst_case_rho': worst_case,
        })
        logger.info("calibration multiplier %d: error %.4f", multiplier, rows[-1]['mean_abs_error'])
    return pd.DataFrame(rows)


def run_payoff_vs_k(config: Config, graph: BaseGraph, k_values: Sequence[int],
                    algorithms: Sequence[str] = K_ALGORITHMS) -> pd.DataFrame:
    """Payoff of each algorithm and OPT_LP as the total seed cap grows."""
    networks = networks_from_config(config, graph)
    base = build_instance(config, networks, graph)
    collections = sample_collections(config, networks)
    estimator = RRSetEstimator(collections)

    rows = []
    for total in k_values:
        instance = _with_total(base, total)
        solution = solve_lp(build_lp(instance, collections), config.get('lp_solver'))
        for name in algorithms:
            alloc, _ = run_algorithm(name, instance, collections, config, solution)
            payoff = objective_revenue(instance, alloc, estimator)
            rows.append({'K': total, 'algorithm': name, 'payoff': payoff,
                         'opt_lp': solution.objective,
                         'ratio_to_opt_lp': payoff / solution.objective if solution.objective > 0 else math.nan})
        logger.info("K=%d done (OPT_LP %.3f)", total, solution.objective)
    return pd.DataFrame(rows)


def run_payoff_vs_m(config: Config, graph: BaseGraph, m_values: Sequence[int],
                    algorithms: Sequence[str] = ('greedy',),
                    unlimited_exposure: bool = False) -> pd.DataFrame:
    """Total and per-advertiser payoff on identical networks with K = 10 m (r_v = m when unlimited)."""
    rows = []
    for m in m_values:
        scenario = _scenario(config, m=m, total_seeds=10 * m, seed_caps=None)
        if unlimited_exposure:
            scenario.set('exposure_bound', m)
        networks = networks_from_config(scenario, graph, m, NetworkMode.IDENTICAL)
        instance = build_instance(scenario, networks, graph)
        collections = sample_collections(scenario, networks, shared=True)
        estimator = RRSetEstimator(collections)
        for name in algorithms:
            alloc, _ = run_algorithm(name, instance, collections, scenario)
            payoff = objective_revenue(instance, alloc, estimator)
            rows.append({'m': m, 'algorithm': name, 'payoff': payoff, 'per_advertiser_payoff': payoff / m})
    return pd.DataFrame(rows)


def run_competition(config: Config, graph: BaseGraph, s_values: Sequence[int], m: int = 20,
                    total: int = 200) -> pd.DataFrame:
    """Greedy payoff on node-swapped advertiser networks as similarity s falls."""
    rows = []
    for s in s_values:
        scenario = _scenario(config, m=m, total_seeds=total, swap_parameter=s, seed_caps=None)
        networks = networks_from_config(scenario, graph, m, NetworkMode.SWAPPED)
        instance = build_instance(scenario, networks, graph)
        collections = sample_collections(scenario, networks)
        alloc = greedy_allocate(instance, RRSetEstimator(collections))
        rows.append({'s': s, 'payoff': objective_revenue(instance, alloc, RRSetEstimator(collections))})
        logger.info("competition s=%d payoff %.3f", s, rows[-1]['payoff'])
    frame = pd.DataFrame(rows)
    baseline = frame.loc[frame['s'].idxmin(), 'payoff']
    frame['ratio_to_s0'] = frame['payoff'] / baseline if baseline > 0 else math.nan
    return frame


def _greedy_payoff(instance: ProblemInstance, collections: Sequence[RRCollection]) -> float:
    estimator = RRSetEstimator(collections)
    return objective_revenue(instance, greedy_allocate(instance, estimator), estimator)


def run_relative_payoff(config: Config, graph: BaseGraph, p_values: Sequence[float],
                        m: int = 20) -> pd.DataFrame:
    """alpha(p) = payoff with m advertisers / payoff with one, uniform p, B_j = n/5, K = 10 m."""
    n = graph.node_count
    rows = []
    for p in p_values:
        scenario = _scenario(config, m=m, total_seeds=10 * m, budgets=n / 5.0, seed_caps=None,
                             uniform_p=p)
        networks = networks_from_config(scenario, graph, m, NetworkMode.UNIFORM)
        collections = sample_collections(scenario, networks, shared=True)
        many = _greedy_payoff(build_instance(scenario, networks, graph), collections)

        single = _scenario(scenario, m=1, total_seeds=10)
        one = _greedy_payoff(build_instance(single, networks[:1], graph), collections[:1])
        rows.append({'p': p, 'payoff_single': one, 'payoff_many': many,
                     'alpha': many / one if one > 0 else math.nan})
        logger.info("p=%.3f alpha %.3f", p, rows[-1]['alpha'])
    return pd.DataFrame(rows)


def run_scalability(config: Config, graph: BaseGraph, m_values: Sequence[int],
                    threads_list: Sequence[int]) -> pd.DataFrame:
    """RR build and greedy wall-clock per thread count; allocations must match across rows."""
    rows = []
    for m in m_values:
        baseline: Optional[float] = None
        for threads in threads_list:
            scenario = _scenario(config, m=m, threads=threads)
            networks = networks_from_config(scenario, graph, m)
            instance = build_instance(scenario, networks, graph)
            start = time.perf_counter()
            collections = sample_collections(scenario, networks)
            built = time.perf_counter()
            alloc = greedy_allocate(instance, RRSetEstimator(collections))
            finished = time.perf_counter()
            build_seconds = built - start
            baseline = build_seconds if baseline is None else baseline
            rows.append({'m': m, 'threads': threads, 'rr_build_seconds': build_seconds,
                         'total_seconds': finished - start,
                         'speedup': baseline / build_seconds if build_seconds > 0 else math.nan,
                         'allocation_digest': allocation_digest(alloc)})
    return pd.DataFrame(rows)


EXPERIMENTS: Dict[str, Callable[..., pd.DataFrame]] = {
    'calibrate': run_calibration,
    'exp-k': run_payoff_vs_k,
    'exp-m': run_payoff_vs_m,
    'exp-compete': run_competition,
    'exp-prob': run_relative_payoff,
    'exp-scale': run_scalability,
}

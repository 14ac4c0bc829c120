"""
Structure-only baseline allocators.
Rank nodes by degree or eigenvector centrality and deal them out round-robin.
"""

import logging

import numpy as np
import scipy.sparse as sp

from campaign.allocation import Allocation, GroundElement
from campaign.payoff import ProblemInstance
from network.graph import BaseGraph

logger = logging.getLogger(__name__)

CENTRALITY_TOLERANCE = 1e-8
CENTRALITY_MAX_ITERATIONS = 1000
SCORE_DECIMALS = 12


def round_robin_assign(instance: ProblemInstance, order: np.ndarray) -> Allocation:
    """
    Walk nodes in order; node v goes to the next min(r_v, m) advertisers.

    The advertiser pointer is global across nodes. Advertisers whose cap is
    exhausted are skipped; the walk stops at K assignments.
    """
    constraints = instance.constraints
    m, total_cap = instance.m, constraints.total_cap
    caps = constraints.advertiser_caps
    load = np.zeros(m, dtype=np.int64)
    pointer = 0
    chosen = []

    for v in order.tolist():
        if len(chosen) >= total_cap:
            break
        if caps is not None and np.all(load >= caps):
            break
        wanted = min(int(constraints.exposure_bounds[v]), m)
        assigned = tried = 0
        while assigned < wanted and tried < m and len(chosen) < total_cap:
            j = pointer % m
            pointer += 1
            tried += 1
            if caps is not None and load[j] >= caps[j]:
                continue
            chosen.append(GroundElement(v, j))
            load[j] += 1
            assigned += 1
    return Allocation(chosen)


def degree_order(graph: BaseGraph) -> np.ndarray:
    """Nodes by degree descending, ties by node index."""
    degrees = graph.degrees()
    return np.lexsort((np.arange(graph.node_count), -degrees))


def max_degree_allocate(instance: ProblemInstance) -> Allocation:
    """Highest-degree nodes dealt to advertisers round-robin."""
    alloc = round_robin_assign(instance, degree_order(instance.graph))
    logger.info("max-degree chose %d seeds", len(alloc))
    return alloc


def eigenvector_centrality(graph: BaseGraph, tolerance: float = CENTRALITY_TOLERANCE,
                           max_iterations: int = CENTRALITY_MAX_ITERATIONS) -> np.ndarray:
    """
    Leading eigenvector of the adjacency matrix by power iteration.

    Iterates with A + I, which has the same leading eigenvector as A but
    does not oscillate on bipartite graphs. For directed graphs a node's
    score sums the scores of the nodes it points to.
    """
    n = graph.node_count
    if n == 0:
        return np.zeros(0)
    adjacency = sp.csr_matrix((np.ones(graph.arc_count), (graph.src, graph.dst)), shape=(n, n))
    shifted = adjacency + sp.identity(n, format='csr')

    x = np.full(n, 1.0 / np.sqrt(n))
    for iteration in range(max_iterations):
        nxt = shifted @ x
        nxt /= np.linalg.norm(nxt)
        change = np.linalg.norm(nxt - x)
        x = nxt
        if change < tolerance:
            logger.debug("eigenvector centrality converged after %d iterations", iteration + 1)
            return x
    logger.warning("eigenvector centrality did not converge in %d iterations; "
                   "using the last iterate", max_iterations)
    return x


def centrality_order(graph: BaseGraph) -> np.ndarray:
    """Nodes by centrality descending; scores equal at 1e-12 fall back to node index."""
    scores = np.round(eigenvector_centrality(graph), SCORE_DECIMALS)
    return np.lexsort((np.arange(graph.node_count), -scores))


def eigen_centrality_allocate(instance: ProblemInstance) -> Allocation:
    """Most central nodes dealt to advertisers round-robin."""
    alloc = round_robin_assign(instance, centrality_order(instance.graph))
    logger.info("eigen-centrality chose %d seeds", len(alloc))
    return alloc

"""
Independent Cascade diffusion.
Forward cascade simulation, Monte Carlo reach estimation and the exact live-edge oracle.
"""

import logging
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import FrozenSet, Iterable, List

import numpy as np
import scipy.sparse as sp

from network.graph import InfluenceNetwork
from utils.errors import CapacityError, DomainError
from utils.streams import RandomSource, as_generator, block_ranges, derive_rng

logger = logging.getLogger(__name__)

MAX_EXACT_ARCS = 24
MC_BLOCK_SIZE = 4096
BATCH_CELLS = 4_000_000  # trials * arcs held in memory per live-edge batch


@dataclass(frozen=True)
class DiffusionOutcome:
    """One realized cascade."""
    activated: FrozenSet[int]
    rounds: int


@dataclass(frozen=True)
class InfluenceEstimate:
    """Monte Carlo mean with its standard error."""
    mean: float
    stderr: float
    trials: int


def validate_seeds(net: InfluenceNetwork, seeds: Iterable[int]) -> List[int]:
    """Sorted, de-duplicated seed list; raises for ids outside the node range."""
    seed_list = sorted(set(int(s) for s in seeds))
    if seed_list and (seed_list[0] < 0 or seed_list[-1] >= net.node_count):
        raise DomainError(f"seed id outside [0, {net.node_count})")
    return seed_list


def simulate_ic(net: InfluenceNetwork, seeds: Iterable[int], rng_seed: RandomSource) -> DiffusionOutcome:
    """Run one cascade; each arc out of a newly active node fires once."""
    seed_list = validate_seeds(net, seeds)
    rng = as_generator(rng_seed)

    active = np.zeros(net.node_count, dtype=bool)
    active[seed_list] = True
    frontier = deque(seed_list)
    rounds = 0

    while frontier:
        next_frontier = []
        for u in frontier:
            heads, probs = net.out_arcs(u)
            if heads.size == 0:
                continue
            fired = heads[rng.random(heads.size) < probs]
            for w in fired.tolist():
                if not active[w]:
                    active[w] = True
                    next_frontier.append(w)
        if next_frontier:
            rounds += 1
        frontier = deque(sorted(next_frontier))

    return DiffusionOutcome(frozenset(np.flatnonzero(active).tolist()), rounds)


def _arc_scatter(net: InfluenceNetwork) -> sp.csr_matrix:
    """Node-by-arc incidence of arc heads."""
    arcs = net.arc_count
    return sp.csr_matrix((np.ones(arcs), (net.dst, np.arange(arcs))), shape=(net.node_count, arcs))


def propagate_live_edges(net: InfluenceNetwork, seeds: List[int], live: np.ndarray,
                         scatter: sp.csr_matrix = None) -> np.ndarray:
    """Reach counts from seeds in each live-edge subgraph (one row of `live` per subgraph)."""
    rows = live.shape[0]
    reached = np.zeros((rows, net.node_count), dtype=bool)
    if not seeds:
        return np.zeros(rows, dtype=np.int64)
    reached[:, seeds] = True
    if net.arc_count == 0:
        return reached.sum(axis=1)

    scatter = _arc_scatter(net) if scatter is None else scatter
    while True:
        fired = live & reached[:, net.src]
        hits = np.asarray(scatter @ fired.T.astype(np.float64)).T > 0
        grown = reached | hits
        if np.array_equal(grown, reached):
            return reached.sum(axis=1)
        reached = grown


def _batch_rows(net: InfluenceNetwork) -> int:
    """Trials per live-edge batch."""
    return max(1, min(MC_BLOCK_SIZE, BATCH_CELLS // max(net.arc_count, net.node_count, 1)))


def _block_counts(net, seeds, scatter, rng_seed, block, start, stop) -> np.ndarray:
    """Reach counts for trials [start, stop) from block stream `block`."""
    rng = derive_rng(rng_seed, block)
    counts = np.empty(stop - start, dtype=np.int64)
    step = _batch_rows(net)
    for lo in range(0, stop - start, step):
        hi = min(lo + step, stop - start)
        live = rng.random((hi - lo, net.arc_count)) < net.prob
        counts[lo:hi] = propagate_live_edges(net, seeds, live, scatter)
    return counts


def sample_reach_counts(net: InfluenceNetwork, seeds: Iterable[int], trials: int,
                        rng_seed: int, threads: int = 1) -> np.ndarray:
    """Activated-node count of each of `trials` independent cascades."""
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials}")
    seed_list = validate_seeds(net, seeds)
    if not seed_list:
        return np.zeros(trials, dtype=np.int64)

    scatter = _arc_scatter(net) if net.arc_count else None
    blocks = list(block_ranges(trials, MC_BLOCK_SIZE))
    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            parts = list(executor.map(
                lambda b: _block_counts(net, seed_list, scatter, rng_seed, *b), blocks))
    else:
        parts = [_block_counts(net, seed_list, scatter, rng_seed, *b) for b in blocks]
    return np.concatenate(parts)


def estimate_influence_mc(net: InfluenceNetwork, seeds: Iterable[int], trials: int,
                          rng_seed: int, threads: int = 1) -> InfluenceEstimate:
    """Sample mean of the activated count and its standard error."""
    counts = sample_reach_counts(net, seeds, trials, rng_seed, threads).astype(np.float64)
    mean = float(counts.sum() / trials)
    if trials < 2:
        return InfluenceEstimate(mean, 0.0, trials)
    stderr = float(np.sqrt(counts.var(ddof=1) / trials))
    return InfluenceEstimate(mean, stderr, trials)


def exact_influence(net: InfluenceNetwork, seeds: Iterable[int]) -> float:
    """
    Exact expected reach by enumerating live-edge subgraphs.

    Arcs with probability 1 are always live, so only the fractional arcs
    are enumerated; subsets are processed in vectorized chunks.
    """
    seed_list = validate_seeds(net, seeds)
    if net.arc_count > MAX_EXACT_ARCS:
        raise CapacityError("exact influence arc count", net.arc_count, MAX_EXACT_ARCS)
    if not seed_list:
        return 0.0

    uncertain = np.flatnonzero(net.prob < 1.0)
    p = net.prob[uncertain]
    k = uncertain.size
    scatter = _arc_scatter(net) if net.arc_count else None
    shifts = np.arange(k, dtype=np.int64)

    total = 0.0
    chunk = 1 << 14
    for start in range(0, 1 << k, chunk):
        masks = np.arange(start, min(start + chunk, 1 << k), dtype=np.int64)
        bits = ((masks[:, None] >> shifts) & 1).astype(bool)
        weights = np.prod(np.where(bits, p, 1.0 - p), axis=1)
        live = np.ones((masks.size, net.arc_count), dtype=bool)
        live[:, uncertain] = bits
        counts = propagate_live_edges(net, seed_list, live, scatter)
        total += float(weights @ counts)
    return total

"""
Reverse-reachable set sampling.
Builds per-advertiser RR collections and estimates reach from their coverage.
"""

import logging
import math
import struct
from collections import deque
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from typing import Iterable, List, Sequence, Tuple

import numpy as np
from scipy.special import gammaln

from network.graph import InfluenceNetwork
from utils.errors import DomainError
from utils.streams import block_ranges, derive_rng, derive_seed

logger = logging.getLogger(__name__)

RR_BLOCK_SIZE = 1024
DEFAULT_RHO_MULTIPLIER = 10

DUMP_MAGIC = b'RRSC'
DUMP_VERSION = 1
HEADER = struct.Struct('<4sHIII')   # magic, version, advertiser, n, rho
SET_HEADER = struct.Struct('<II')   # root, length


class RRCollection:
    """Reverse-reachable sets of one advertiser with an inverted node index."""

    def __init__(self, advertiser: int, n: int, roots: np.ndarray, sets: List[np.ndarray]):
        """Initialize collection from roots and sorted member arrays."""
        if len(sets) < 1:
            raise DomainError("an RR collection needs at least one set")
        if len(roots) != len(sets):
            raise DomainError("one root per RR set is required")
        self.advertiser = advertiser
        self.n = n
        self.roots = np.asarray(roots, dtype=np.int64)
        self.sets = [np.asarray(s, dtype=np.int64) for s in sets]
        self.inverted_index = self._build_index()
        self.covered = np.zeros(len(self.sets), dtype=bool)

    def _build_index(self) -> List[np.ndarray]:
        """Transpose of the membership relation: node -> sorted set ids."""
        lengths = np.fromiter((s.size for s in self.sets), dtype=np.int64, count=len(self.sets))
        members = np.concatenate(self.sets) if self.sets else np.empty(0, dtype=np.int64)
        set_ids = np.repeat(np.arange(len(self.sets), dtype=np.int64), lengths)
        order = np.argsort(members, kind='stable')
        ptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(np.bincount(members, minlength=self.n), out=ptr[1:])
        sorted_ids = set_ids[order]
        return [sorted_ids[ptr[v]:ptr[v + 1]] for v in range(self.n)]

    @property
    def rho(self) -> int:
        """Number of sets."""
        return len(self.sets)

    @property
    def scale(self) -> float:
        """Reach represented by one covered set (n / rho)."""
        return self.n / self.rho

    def sets_containing(self, node: int) -> np.ndarray:
        """Ids of the sets that list node."""
        return self.inverted_index[node]

    # Incremental coverage used by greedy

    def reset_coverage(self) -> None:
        """Clear all covered marks."""
        self.covered[:] = False

    def uncovered_count(self, node: int) -> int:
        """Sets containing node that are not yet covered."""
        ids = self.inverted_index[node]
        return int(ids.size - np.count_nonzero(self.covered[ids]))

    def mark_covered(self, node: int) -> int:
        """Cover every set containing node; returns the number newly covered."""
        ids = self.inverted_index[node]
        fresh = int(ids.size - np.count_nonzero(self.covered[ids]))
        self.covered[ids] = True
        return fresh

    def __repr__(self) -> str:
        """String representation."""
        return f"RRCollection(advertiser={self.advertiser}, n={self.n}, rho={self.rho})"


def _reverse_bfs(net: InfluenceNetwork, root: int, rng: np.random.Generator) -> np.ndarray:
    """Nodes reaching root in one lazily sampled live-edge graph."""
    visited = {root}
    queue = deque([root])
    while queue:
        v = queue.popleft()
        tails, probs = net.in_arcs(v)
        if tails.size == 0:
            continue
        for u in tails[rng.random(tails.size) < probs].tolist():
            if u not in visited:
                visited.add(u)
                queue.append(u)
    return np.array(sorted(visited), dtype=np.int64)


def _sample_block(net: InfluenceNetwork, rng_seed: int, block: int, start: int,
                  stop: int) -> Tuple[np.ndarray, List[np.ndarray]]:
    """Roots and RR sets for samples [start, stop) from block stream `block`."""
    rng = derive_rng(rng_seed, block)
    roots = rng.integers(0, net.node_count, size=stop - start)
    return roots, [_reverse_bfs(net, int(root), rng) for root in roots.tolist()]


def _sample_block_args(args) -> Tuple[np.ndarray, List[np.ndarray]]:
    """Picklable adapter for pool map."""
    return _sample_block(*args)


def sample_rr_sets(net: InfluenceNetwork, count: int, rng_seed: int, advertiser: int = 0,
                   threads: int = 1, backend: str = 'process') -> RRCollection:
    """
    Sample `count` RR sets for one advertiser's network.

    Samples are cut into fixed blocks, each drawing from its own derived
    stream, so the collection is identical for any thread count or backend.
    """
    if count < 1:
        raise DomainError(f"RR sample count must be >= 1, got {count}")
    if net.node_count < 1:
        raise DomainError("cannot sample RR sets on an empty graph")

    jobs = [(net, rng_seed, block, start, stop)
            for block, start, stop in block_ranges(count, RR_BLOCK_SIZE)]

    if threads > 1 and len(jobs) > 1:
        if backend == 'process':
            pool = ProcessPoolExecutor(max_workers=threads)
        elif backend == 'thread':
            pool = ThreadPoolExecutor(max_workers=threads)
        else:
            raise DomainError(f"unknown parallel backend '{backend}'")
        with pool as executor:
            parts = list(executor.map(_sample_block_args, jobs))
    else:
        parts = [_sample_block_args(job) for job in jobs]

    roots = np.concatenate([p[0] for p in parts])
    sets = [s for p in parts for s in p[1]]
    logger.debug("sampled %d RR sets for advertiser %d (mean size %.2f)",
                 count, advertiser, float(np.mean([s.size for s in sets])))
    return RRCollection(advertiser, net.node_count, roots, sets)


def _seed_marks(coll: RRCollection, seeds: Iterable[int]) -> np.ndarray:
    """Per-call visited marks of the sets hit by seeds."""
    marks = np.zeros(coll.rho, dtype=bool)
    for s in seeds:
        s = int(s)
        if not 0 <= s < coll.n:
            raise DomainError(f"seed id {s} outside [0, {coll.n})")
        marks[coll.inverted_index[s]] = True
    return marks


def coverage_count(coll: RRCollection, seeds: Iterable[int]) -> int:
    """Number of sets intersecting seeds."""
    return int(np.count_nonzero(_seed_marks(coll, seeds)))


def estimate_reach(coll: RRCollection, seeds: Iterable[int]) -> float:
    """Unbiased reach estimate n * I(S) / rho."""
    return coll.n * coverage_count(coll, seeds) / coll.rho


def default_sample_count(n: int, multiplier: int = DEFAULT_RHO_MULTIPLIER) -> int:
    """Calibrated sample count (10 n by default)."""
    if n < 1:
        raise DomainError(f"node count must be >= 1, got {n}")
    return multiplier * n


def theoretical_sample_count(n: int, m: int, seed_cap: int, opt_lower_bound: float,
                             epsilon: float, c: float = 1.0) -> int:
    """
    Worst-case sample count 9 n^3 m^2 (c ln n + ln m + ln C(n, k) + ln 2) / (OPT eps^2).

    Reported alongside calibration results; never used as a runtime default.
    """
    if n < 1 or m < 1:
        raise DomainError("n and m must be >= 1")
    if opt_lower_bound <= 0 or epsilon <= 0:
        raise DomainError("OPT lower bound and epsilon must be positive")
    k = min(max(seed_cap, 0), n)
    log_binom = gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)
    log_terms = c * math.log(n) + math.log(m) + float(log_binom) + math.log(2.0)
    return int(math.ceil(9.0 * n ** 3 * m ** 2 * log_terms / (opt_lower_bound * epsilon ** 2)))


def build_collections(networks: Sequence[InfluenceNetwork], rho: int, rng_seed: int,
                      threads: int = 1, shared: bool = False,
                      backend: str = 'process') -> List[RRCollection]:
    """One collection per advertiser; shared=True samples once and copies per advertiser."""
    if shared:
        first = sample_rr_sets(networks[0], rho, derive_seed(rng_seed, 0), 0, threads, backend)
        return [RRCollection(j, first.n, first.roots, first.sets) for j in range(len(networks))]
    return [sample_rr_sets(net, rho, derive_seed(rng_seed, j), j, threads, backend)
            for j, net in enumerate(networks)]


def save_collection(coll: RRCollection, path: str) -> None:
    """Write a collection in the RRSC binary format."""
    with open(path, 'wb') as f:
        f.write(HEADER.pack(DUMP_MAGIC, DUMP_VERSION, coll.advertiser, coll.n, coll.rho))
        for root, members in zip(coll.roots.tolist(), coll.sets):
            f.write(SET_HEADER.pack(root, members.size))
            f.write(members.astype('<u4').tobytes())


def load_collection(path: str) -> RRCollection:
    """Read a collection written by save_collection."""
    with open(path, 'rb') as f:
        magic, version, advertiser, n, rho = HEADER.unpack(f.read(HEADER.size))
        if magic != DUMP_MAGIC:
            raise DomainError(f"{path} is not an RR collection dump")
        if version != DUMP_VERSION:
            raise DomainError(f"unsupported RR dump version {version}")
        roots: List[int] = []
        sets: List[np.ndarray] = []
        for _ in range(rho):
            root, length = SET_HEADER.unpack(f.read(SET_HEADER.size))
            roots.append(root)
            sets.append(np.frombuffer(f.read(4 * length), dtype='<u4').astype(np.int64))
    return RRCollection(advertiser, n, np.array(roots, dtype=np.int64), sets)


def collections_match(first: Sequence[RRCollection], second: Sequence[RRCollection]) -> bool:
    """Set-by-set equality of two collection lists."""
    if len(first) != len(second):
        return False
    for a, b in zip(first, second):
        if a.n != b.n or a.rho != b.rho or not np.array_equal(a.roots, b.roots):
            return False
        if any(not np.array_equal(x, y) for x, y in zip(a.sets, b.sets)):
            return False
    return True


def total_samples(collections: Sequence[RRCollection]) -> int:
    """Sum of rho over advertisers."""
    return sum(c.rho for c in collections)

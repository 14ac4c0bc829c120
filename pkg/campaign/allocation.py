"""
Seed allocations and their constraints.
Ground elements (node, advertiser), the constraint system, and the two matroids it induces.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from utils.errors import CapacityError, ConfigurationError, DomainError

logger = logging.getLogger(__name__)

MAX_EXCHANGE_GROUND = 14


@dataclass(frozen=True, order=True)
class GroundElement:
    """Assignment of node v as a seed of advertiser j."""
    node: int
    advertiser: int

    @property
    def sort_key(self) -> Tuple[int, int]:
        """Ordering by advertiser, then node."""
        return self.advertiser, self.node


class Allocation:
    """Immutable set of ground elements."""

    def __init__(self, elements: Iterable[GroundElement] = ()):
        """Initialize allocation."""
        self.elements: FrozenSet[GroundElement] = frozenset(elements)

    @classmethod
    def from_pairs(cls, pairs: Iterable[Tuple[int, int]]) -> 'Allocation':
        """Build from (node, advertiser) pairs."""
        return cls(GroundElement(int(v), int(j)) for v, j in pairs)

    def with_element(self, element: GroundElement) -> 'Allocation':
        """Copy with element added."""
        return Allocation(self.elements | {element})

    def without(self, *elements: GroundElement) -> 'Allocation':
        """Copy with elements removed."""
        return Allocation(self.elements - set(elements))

    def per_advertiser(self, m: int) -> List[FrozenSet[int]]:
        """Seed set of each advertiser."""
        seeds: List[set] = [set() for _ in range(m)]
        for e in self.elements:
            if not 0 <= e.advertiser < m:
                raise DomainError(f"advertiser {e.advertiser} outside [0, {m})")
            seeds[e.advertiser].add(e.node)
        return [frozenset(s) for s in seeds]

    def per_node(self) -> Dict[int, FrozenSet[int]]:
        """Advertisers assigned to each seeded node."""
        nodes: Dict[int, set] = {}
        for e in self.elements:
            nodes.setdefault(e.node, set()).add(e.advertiser)
        return {v: frozenset(js) for v, js in nodes.items()}

    def sorted_elements(self) -> List[GroundElement]:
        """Elements ordered by (advertiser, node)."""
        return sorted(self.elements, key=lambda e: e.sort_key)

    def __contains__(self, element: GroundElement) -> bool:
        return element in self.elements

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.sorted_elements())

    def __eq__(self, other) -> bool:
        """Check equality."""
        if isinstance(other, Allocation):
            return self.elements == other.elements
        return False

    def __hash__(self) -> int:
        """Hash for use in sets/dicts."""
        return hash(self.elements)

    def __repr__(self) -> str:
        """String representation."""
        pairs = ", ".join(f"({e.node},{e.advertiser})" for e in self.sorted_elements())
        return f"Allocation({{{pairs}}})"


def allocation_frame(alloc: Allocation, labels: Optional[np.ndarray] = None) -> pd.DataFrame:
    """Allocation as a node/advertiser table sorted by (advertiser, node)."""
    rows = [(e.node, e.advertiser) for e in alloc.sorted_elements()]
    frame = pd.DataFrame(rows, columns=['node', 'advertiser'], dtype=np.int64)
    if labels is not None and len(frame):
        frame['node'] = np.asarray(labels)[frame['node'].to_numpy()]
    return frame


def write_allocation_csv(alloc: Allocation, path: str, labels: Optional[np.ndarray] = None) -> None:
    """Write "node,advertiser" rows with a header."""
    allocation_frame(alloc, labels).to_csv(path, index=False)


def read_allocation_csv(path: str, labels: Optional[np.ndarray] = None) -> Allocation:
    """Read an allocation CSV; labels maps original ids back to dense ones."""
    frame = pd.read_csv(path, comment='#')
    missing = {'node', 'advertiser'} - set(frame.columns)
    if missing:
        raise ConfigurationError(f"{path} lacks columns {sorted(missing)}")
    nodes = frame['node'].to_numpy(dtype=np.int64)
    if labels is not None:
        labels = np.asarray(labels)
        dense = np.searchsorted(labels, nodes)
        if np.any(dense >= labels.size) or np.any(labels[np.minimum(dense, labels.size - 1)] != nodes):
            raise DomainError(f"{path} names nodes that are not in the graph")
        nodes = dense
    return Allocation.from_pairs(zip(nodes.tolist(), frame['advertiser'].astype(int).tolist()))


class ConstraintSystem:
    """Exposure bounds r_v, optional advertiser caps k_j and total cap K."""

    def __init__(self, exposure_bounds: Sequence[int], total_cap: int,
                 advertiser_caps: Optional[Sequence[int]] = None):
        """Initialize constraint system."""
        self.exposure_bounds = np.asarray(exposure_bounds, dtype=np.int64)
        self.advertiser_caps = (None if advertiser_caps is None
                                else np.asarray(advertiser_caps, dtype=np.int64))
        self.total_cap = int(total_cap)
        if self.exposure_bounds.size and self.exposure_bounds.min() < 0:
            raise DomainError("exposure bounds must be non-negative")
        if self.advertiser_caps is not None and self.advertiser_caps.size and self.advertiser_caps.min() < 0:
            raise DomainError("advertiser caps must be non-negative")
        if self.total_cap < 0:
            raise DomainError("total seed cap must be non-negative")

    @classmethod
    def uniform(cls, n: int, exposure_bound: int, total_cap: int,
                advertiser_caps: Optional[Sequence[int]] = None) -> 'ConstraintSystem':
        """Same exposure bound at every node."""
        return cls(np.full(n, exposure_bound, dtype=np.int64), total_cap, advertiser_caps)

    @property
    def node_count(self) -> int:
        """Number of nodes covered by the exposure bounds."""
        return int(self.exposure_bounds.size)

    @property
    def has_caps(self) -> bool:
        """Whether per-advertiser caps are active."""
        return self.advertiser_caps is not None

    def __repr__(self) -> str:
        """String representation."""
        caps = "none" if self.advertiser_caps is None else self.advertiser_caps.tolist()
        return f"ConstraintSystem(n={self.node_count}, K={self.total_cap}, caps={caps})"


def is_feasible(constraints: ConstraintSystem, alloc: Allocation) -> bool:
    """All applicable constraints hold."""
    if len(alloc) > constraints.total_cap:
        return False
    n = constraints.node_count
    node_load = np.zeros(n, dtype=np.int64)
    for e in alloc.elements:
        if not 0 <= e.node < n:
            raise DomainError(f"node {e.node} outside [0, {n})")
        node_load[e.node] += 1
    if np.any(node_load > constraints.exposure_bounds):
        return False
    if constraints.advertiser_caps is not None:
        caps = constraints.advertiser_caps
        load = np.zeros(caps.size, dtype=np.int64)
        for e in alloc.elements:
            if not 0 <= e.advertiser < caps.size:
                raise DomainError(f"advertiser {e.advertiser} outside [0, {caps.size})")
            load[e.advertiser] += 1
        if np.any(load > caps):
            return False
    return True


class MatroidCounter:
    """Incremental independence tracking for one growing set."""

    def __init__(self, matroid: 'Matroid'):
        """Initialize counter over the empty set."""
        self.matroid = matroid
        self.current: set = set()

    def can_add(self, element: GroundElement) -> bool:
        """Whether current + element stays independent."""
        return self.matroid.can_add(self.current, element)

    def add(self, element: GroundElement) -> None:
        """Add element."""
        self.current.add(element)

    def remove(self, element: GroundElement) -> None:
        """Remove element."""
        self.current.discard(element)


class Matroid(ABC):
    """Independence system over the (node, advertiser) ground set."""

    def __init__(self, n: int, m: int):
        """Initialize matroid over n nodes and m advertisers."""
        self.n = n
        self.m = m

    @property
    def ground_size(self) -> int:
        """Number of ground elements."""
        return self.n * self.m

    def ground_elements(self) -> List[GroundElement]:
        """Ground set ordered by (advertiser, node)."""
        return [GroundElement(v, j) for j in range(self.m) for v in range(self.n)]

    @abstractmethod
    def is_independent(self, elements: Iterable[GroundElement]) -> bool:
        """Independence oracle."""

    def can_add(self, elements: Iterable[GroundElement], element: GroundElement) -> bool:
        """Whether elements + element is independent; elements must be independent."""
        return self.is_independent(set(elements) | {element})

    def matroid_counter(self) -> MatroidCounter:
        """Incremental oracle starting from the empty set."""
        return MatroidCounter(self)


class PartitionCounter(MatroidCounter):
    """Per-class counters giving O(1) can_add."""

    def __init__(self, matroid: 'PartitionMatroid'):
        """Initialize counters at zero."""
        super().__init__(matroid)
        self.load = np.zeros(matroid.capacities.size, dtype=np.int64)

    def can_add(self, element: GroundElement) -> bool:
        """Whether one more element fits its class and the truncation."""
        if element in self.current:
            return False
        matroid = self.matroid
        if matroid.truncation is not None and len(self.current) >= matroid.truncation:
            return False
        part = matroid.class_of(element)
        return bool(self.load[part] < matroid.capacities[part])

    def add(self, element: GroundElement) -> None:
        """Add element and bump its class counter."""
        if element not in self.current:
            self.current.add(element)
            self.load[self.matroid.class_of(element)] += 1

    def remove(self, element: GroundElement) -> None:
        """Remove element and release its class slot."""
        if element in self.current:
            self.current.remove(element)
            self.load[self.matroid.class_of(element)] -= 1


class PartitionMatroid(Matroid):
    """Partition matroid with per-class capacities and an optional size truncation."""

    def __init__(self, n: int, m: int, class_of: Callable[[GroundElement], int],
                 capacities: Sequence[int], truncation: Optional[int] = None):
        """Initialize partition matroid."""
        super().__init__(n, m)
        self.class_of = class_of
        self.capacities = np.asarray(capacities, dtype=np.int64)
        self.truncation = truncation

    def is_independent(self, elements: Iterable[GroundElement]) -> bool:
        """Every class within capacity and total within truncation."""
        elements = set(elements)
        if self.truncation is not None and len(elements) > self.truncation:
            return False
        load = np.zeros(self.capacities.size, dtype=np.int64)
        for e in elements:
            load[self.class_of(e)] += 1
        return bool(np.all(load <= self.capacities))

    def matroid_counter(self) -> PartitionCounter:
        """Counting oracle starting from the empty set."""
        return PartitionCounter(self)


class OracleMatroid(Matroid):
    """Independence given by an arbitrary predicate (used to test the axioms)."""

    def __init__(self, n: int, m: int, predicate: Callable[[FrozenSet[GroundElement]], bool]):
        """Initialize oracle-backed system."""
        super().__init__(n, m)
        self.predicate = predicate

    def is_independent(self, elements: Iterable[GroundElement]) -> bool:
        """Ask the predicate."""
        return bool(self.predicate(frozenset(elements)))


def _node_class(element: GroundElement) -> int:
    return element.node


def _advertiser_class(element: GroundElement) -> int:
    return element.advertiser


def exposure_matroid(constraints: ConstraintSystem, n: int, m: int) -> PartitionMatroid:
    """At most r_v advertisers per node, truncated at K elements."""
    if constraints.node_count != n:
        raise DomainError(f"exposure bounds cover {constraints.node_count} nodes, expected {n}")
    return PartitionMatroid(n, m, _node_class, constraints.exposure_bounds, constraints.total_cap)


def advertiser_matroid(constraints: ConstraintSystem, n: int, m: int) -> PartitionMatroid:
    """At most k_j seeds per advertiser."""
    if constraints.advertiser_caps is None:
        raise ConfigurationError("advertiser matroid needs per-advertiser seed caps")
    if constraints.advertiser_caps.size != m:
        raise DomainError(f"{constraints.advertiser_caps.size} caps given for {m} advertisers")
    return PartitionMatroid(n, m, _advertiser_class, constraints.advertiser_caps)


def constraint_matroids(constraints: ConstraintSystem, n: int, m: int) -> List[PartitionMatroid]:
    """Matroids whose intersection is the feasible family."""
    matroids = [exposure_matroid(constraints, n, m)]
    if constraints.has_caps:
        matroids.append(advertiser_matroid(constraints, n, m))
    return matroids


def verify_exchange_property(matroid: Matroid, limit: int = MAX_EXCHANGE_GROUND) -> bool:
    """
    Exhaustively check the matroid axioms on a small ground set.

    Checks that the empty set is independent, downward closure, and exchange:
    for independent A and B with |A| < |B| some x in B - A keeps A + x
    independent. Exchange fails for A exactly when the elements that cannot
    extend A, together with A, contain an independent set larger than A.
    """
    ground = matroid.ground_elements()
    size = len(ground)
    if size > limit:
        raise CapacityError("exchange check ground set", size, limit)

    full = 1 << size
    independent = np.zeros(full, dtype=bool)
    for mask in range(full):
        members = [ground[i] for i in range(size) if mask >> i & 1]
        independent[mask] = matroid.is_independent(members)

    if not independent[0]:
        return False

    popcount = np.array([bin(mask).count('1') for mask in range(full)], dtype=np.int64)
    rank = np.zeros(full, dtype=np.int64)
    for mask in range(1, full):
        bits = [i for i in range(size) if mask >> i & 1]
        if independent[mask]:
            if any(not independent[mask ^ (1 << i)] for i in bits):
                return False
            rank[mask] = popcount[mask]
        else:
            rank[mask] = max(rank[mask ^ (1 << i)] for i in bits)

    for mask in np.flatnonzero(independent).tolist():
        blocked = 0
        for i in range(size):
            bit = 1 << i
            if not mask & bit and not independent[mask | bit]:
                blocked |= bit
        if rank[mask | blocked] > popcount[mask]:
            return False
    return True

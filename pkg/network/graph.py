"""
Graph storage for influence networks.
Holds the node/arc structure, per-advertiser edge probabilities, and edge-list I/O.
"""

import logging
from typing import Dict, Iterable, List, Optional, Sequence, TextIO, Tuple

import numpy as np

from utils.errors import DomainError, EdgeListParseError

logger = logging.getLogger(__name__)

COMMENT_PREFIXES = ('#', '%')


class BaseGraph:
    """Directed simple graph on nodes 0..node_count-1 in CSR form."""

    def __init__(self, node_count: int, src: np.ndarray, dst: np.ndarray,
                 directed: bool = True, labels: Optional[np.ndarray] = None):
        """Initialize graph from already-clean, sorted arc arrays."""
        self.node_count = int(node_count)
        self.src = np.asarray(src, dtype=np.int64)
        self.dst = np.asarray(dst, dtype=np.int64)
        self.directed = directed
        self.labels = (np.arange(self.node_count, dtype=np.int64)
                       if labels is None else np.asarray(labels, dtype=np.int64))

        # Out-adjacency: arcs are sorted by (src, dst)
        self.out_ptr = np.zeros(self.node_count + 1, dtype=np.int64)
        np.cumsum(np.bincount(self.src, minlength=self.node_count), out=self.out_ptr[1:])

        # In-adjacency: permutation of arcs sorted by (dst, src)
        self.in_order = np.lexsort((self.src, self.dst))
        self.in_ptr = np.zeros(self.node_count + 1, dtype=np.int64)
        np.cumsum(np.bincount(self.dst, minlength=self.node_count), out=self.in_ptr[1:])

    @classmethod
    def from_arcs(cls, node_count: int, arcs: Iterable[Tuple[int, int]], directed: bool = True,
                  labels: Optional[Sequence[int]] = None) -> 'BaseGraph':
        """Build a graph, dropping self-loops and duplicates; undirected input gets both arcs."""
        pairs = np.asarray(list(arcs), dtype=np.int64).reshape(-1, 2)
        if pairs.size and (pairs.min() < 0 or pairs.max() >= node_count):
            raise DomainError(f"arc endpoint outside [0, {node_count})")
        if not directed:
            pairs = np.vstack([pairs, pairs[:, ::-1]])
        pairs = pairs[pairs[:, 0] != pairs[:, 1]]
        keys = np.unique(pairs[:, 0] * max(node_count, 1) + pairs[:, 1])
        src, dst = np.divmod(keys, max(node_count, 1))
        return cls(node_count, src, dst, directed, labels)

    @property
    def arc_count(self) -> int:
        """Number of stored arcs."""
        return int(self.src.size)

    @property
    def edges(self) -> List[Tuple[int, int]]:
        """Arcs as (u, v) tuples."""
        return list(zip(self.src.tolist(), self.dst.tolist()))

    def out_neighbors(self, u: int) -> np.ndarray:
        """Heads of arcs leaving u."""
        return self.dst[self.out_ptr[u]:self.out_ptr[u + 1]]

    def in_neighbors(self, v: int) -> np.ndarray:
        """Tails of arcs entering v."""
        return self.src[self.in_order[self.in_ptr[v]:self.in_ptr[v + 1]]]

    def arc_index(self, u: int, v: int) -> int:
        """Position of arc (u, v), or -1 when absent."""
        lo, hi = self.out_ptr[u], self.out_ptr[u + 1]
        pos = lo + int(np.searchsorted(self.dst[lo:hi], v))
        if pos < hi and self.dst[pos] == v:
            return int(pos)
        return -1

    def degrees(self) -> np.ndarray:
        """Total degree for directed graphs, plain degree for undirected ones."""
        out_deg = np.diff(self.out_ptr)
        if not self.directed:
            return out_deg
        return out_deg + np.diff(self.in_ptr)

    def subgraph_mask(self, keep: np.ndarray) -> 'BaseGraph':
        """Graph on the same nodes keeping only the masked arcs."""
        return BaseGraph(self.node_count, self.src[keep], self.dst[keep], self.directed, self.labels)

    def __repr__(self) -> str:
        """String representation."""
        kind = "directed" if self.directed else "undirected"
        return f"BaseGraph({self.node_count} nodes, {self.arc_count} arcs, {kind})"


class InfluenceNetwork:
    """Per-advertiser influence network: arcs with activation probability in (0, 1]."""

    def __init__(self, base: BaseGraph, prob: np.ndarray):
        """Initialize network; prob is aligned with base arcs and strictly positive."""
        prob = np.asarray(prob, dtype=np.float64)
        if prob.shape != (base.arc_count,):
            raise DomainError("probability vector does not match the arc count")
        if prob.size and (not np.all(np.isfinite(prob)) or prob.min() <= 0.0 or prob.max() > 1.0):
            raise DomainError("stored probabilities must lie in (0, 1]")
        self.base = base
        self.prob = prob
        # Reverse view used by RR sampling
        self.in_src = base.src[base.in_order]
        self.in_prob = prob[base.in_order]

    @classmethod
    def from_probabilities(cls, base: BaseGraph, prob: np.ndarray) -> 'InfluenceNetwork':
        """Build a network from per-arc values in [0, 1], omitting zero arcs."""
        prob = np.asarray(prob, dtype=np.float64)
        if prob.shape != (base.arc_count,):
            raise DomainError("probability vector does not match the arc count")
        if prob.size and (not np.all(np.isfinite(prob)) or prob.min() < 0.0 or prob.max() > 1.0):
            raise DomainError("probabilities must lie in [0, 1]")
        keep = prob > 0.0
        if keep.all():
            return cls(base, prob)
        return cls(base.subgraph_mask(keep), prob[keep])

    @property
    def node_count(self) -> int:
        """Number of nodes."""
        return self.base.node_count

    @property
    def arc_count(self) -> int:
        """Number of arcs with positive probability."""
        return self.base.arc_count

    @property
    def src(self) -> np.ndarray:
        """Arc tails."""
        return self.base.src

    @property
    def dst(self) -> np.ndarray:
        """Arc heads."""
        return self.base.dst

    def probability(self, u: int, v: int) -> float:
        """Activation probability of (u, v); 0 for non-arcs."""
        pos = self.base.arc_index(u, v)
        return float(self.prob[pos]) if pos >= 0 else 0.0

    def prob_map(self) -> Dict[Tuple[int, int], float]:
        """Sparse probability map {(u, v): p}."""
        return dict(zip(self.base.edges, self.prob.tolist()))

    def out_arcs(self, u: int) -> Tuple[np.ndarray, np.ndarray]:
        """Heads and probabilities of arcs leaving u."""
        lo, hi = self.base.out_ptr[u], self.base.out_ptr[u + 1]
        return self.base.dst[lo:hi], self.prob[lo:hi]

    def in_arcs(self, v: int) -> Tuple[np.ndarray, np.ndarray]:
        """Tails and probabilities of arcs entering v."""
        lo, hi = self.base.in_ptr[v], self.base.in_ptr[v + 1]
        return self.in_src[lo:hi], self.in_prob[lo:hi]

    def same_as(self, other: 'InfluenceNetwork') -> bool:
        """Bitwise equality of the probability maps."""
        return (self.node_count == other.node_count
                and np.array_equal(self.src, other.src)
                and np.array_equal(self.dst, other.dst)
                and np.array_equal(self.prob, other.prob))

    def __repr__(self) -> str:
        """String representation."""
        return f"InfluenceNetwork({self.node_count} nodes, {self.arc_count} live-capable arcs)"


def load_edge_list(text: str, directed: bool = True) -> BaseGraph:
    """Parse a whitespace-separated "u v" edge list into a graph with dense ids."""
    pairs: List[Tuple[int, int]] = []
    warned = False

    for line_number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith(COMMENT_PREFIXES):
            continue
        parts = stripped.split()
        if len(parts) < 2:
            raise EdgeListParseError(line_number, line, "expected two node ids")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise EdgeListParseError(line_number, line, "node ids must be integers")
        if u < 0 or v < 0:
            raise EdgeListParseError(line_number, line, "node ids must be non-negative")
        if len(parts) > 2 and not warned:
            logger.warning("edge list has extra columns from line %d on; weights are ignored", line_number)
            warned = True
        pairs.append((u, v))

    if not pairs:
        return BaseGraph.from_arcs(0, [], directed)

    raw = np.asarray(pairs, dtype=np.int64)
    labels, dense = np.unique(raw, return_inverse=True)
    dense = dense.reshape(raw.shape)
    return BaseGraph.from_arcs(len(labels), dense, directed, labels)


def load_edge_list_file(path: str, directed: bool = True) -> BaseGraph:
    """Read an edge-list file."""
    with open(path, 'r', encoding='utf-8') as f:
        graph = load_edge_list(f.read(), directed)
    logger.info("loaded %s from %s", graph, path)
    return graph


def write_probability_dump(networks: Sequence[InfluenceNetwork], stream: TextIO) -> None:
    """Write "u v j p" lines for every advertiser's arcs."""
    for j, net in enumerate(networks):
        for u, v, p in zip(net.src.tolist(), net.dst.tolist(), net.prob.tolist()):
            stream.write(f"{u} {v} {j} {p:.12g}\n")


def read_probability_dump(text: str, base: BaseGraph, m: int) -> List[InfluenceNetwork]:
    """Rebuild m networks over base's nodes from a probability dump."""
    per_advertiser: List[Dict[Tuple[int, int], float]] = [dict() for _ in range(m)]
    for line_number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith(COMMENT_PREFIXES):
            continue
        parts = stripped.split()
        if len(parts) != 4:
            raise EdgeListParseError(line_number, line, "expected 'u v j p'")
        try:
            u, v, j, p = int(parts[0]), int(parts[1]), int(parts[2]), float(parts[3])
        except ValueError:
            raise EdgeListParseError(line_number, line, "malformed number")
        if not 0 <= j < m:
            raise EdgeListParseError(line_number, line, f"advertiser outside [0, {m})")
        per_advertiser[j][(u, v)] = p

    networks = []
    for probs in per_advertiser:
        graph = BaseGraph.from_arcs(base.node_count, list(probs), True, base.labels)
        values = np.array([probs[(u, v)] for u, v in graph.edges], dtype=np.float64)
        networks.append(InfluenceNetwork.from_probabilities(graph, values))
    return networks

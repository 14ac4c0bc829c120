"""
Influence network generation.
Builds per-advertiser edge probabilities and synthetic graphs for experiments.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional

import networkx as nx
import numpy as np

from network.graph import BaseGraph, InfluenceNetwork, load_edge_list_file
from utils.config import Config
from utils.errors import DomainError
from utils.streams import STREAM_GRAPH, STREAM_NETWORKS, derive_rng, derive_seed

logger = logging.getLogger(__name__)


class NetworkMode(Enum):
    """How advertiser networks relate to one another."""
    INDEPENDENT = 'independent'
    IDENTICAL = 'identical'
    SWAPPED = 'swapped'
    UNIFORM = 'uniform'


@dataclass
class GeneratorConfig:
    """Parameters of the probability generators."""
    lambda_max: float = 0.4
    swap_parameter: int = 0
    uniform_p: Optional[float] = None
    rng_seed: int = 0

    def __post_init__(self):
        """Validate ranges."""
        _check_unit("lambda_max", self.lambda_max)
        if self.uniform_p is not None:
            _check_unit("uniform_p", self.uniform_p)
        if self.swap_parameter < 0:
            raise DomainError(f"swap parameter must be >= 0, got {self.swap_parameter}")


def _check_unit(name: str, value: float) -> None:
    """Require value in [0, 1]."""
    if not 0.0 <= value <= 1.0:
        raise DomainError(f"{name} must lie in [0, 1], got {value}")


def lambda_probabilities(base: BaseGraph, lambdas: np.ndarray) -> InfluenceNetwork:
    """Arc (u, v) gets lambda_u * lambda_v."""
    lambdas = np.asarray(lambdas, dtype=np.float64)
    if lambdas.shape != (base.node_count,):
        raise DomainError("need one lambda per node")
    if lambdas.size and (lambdas.min() < 0.0 or lambdas.max() > 1.0):
        raise DomainError("lambdas must lie in [0, 1]")
    return InfluenceNetwork.from_probabilities(base, lambdas[base.src] * lambdas[base.dst])


def assign_lambda_probabilities(base: BaseGraph, lambda_max: float, rng_seed: int) -> InfluenceNetwork:
    """Draw lambda_v ~ U[0, lambda_max] per node and multiply along arcs."""
    _check_unit("lambda_max", lambda_max)
    rng = derive_rng(rng_seed)
    lambdas = rng.uniform(0.0, lambda_max, size=base.node_count)
    return lambda_probabilities(base, lambdas)


def assign_uniform_probabilities(base: BaseGraph, p: float) -> InfluenceNetwork:
    """Every arc gets probability p."""
    _check_unit("p", p)
    return InfluenceNetwork.from_probabilities(base, np.full(base.arc_count, p, dtype=np.float64))


def swap_count(s: int, n: int) -> int:
    """Number of node swaps for similarity parameter s."""
    return (s * n) // 100


def node_swap_variant(net: InfluenceNetwork, s: int, n: int, rng_seed: int) -> InfluenceNetwork:
    """
    Isomorphic copy of net after floor(s*n/100) random node swaps.

    A swap of positions u and v exchanges the full probability rows and
    columns of the two nodes. The composition of swaps is a relabeling,
    so arcs are carried over by the final permutation in one pass.
    """
    if s < 0:
        raise DomainError(f"swap parameter must be >= 0, got {s}")
    if n != net.node_count:
        raise DomainError(f"node count {n} does not match the network ({net.node_count})")
    swaps = swap_count(s, n)
    if swaps == 0 or n == 0:
        return net

    rng = derive_rng(rng_seed)
    pairs = rng.integers(0, n, size=(swaps, 2))

    label = np.arange(n)      # original node -> current position
    occupant = np.arange(n)   # position -> original node
    for u, v in pairs.tolist():
        if u == v:
            continue
        a, b = occupant[u], occupant[v]
        label[a], label[b] = v, u
        occupant[u], occupant[v] = b, a

    new_src, new_dst = label[net.src], label[net.dst]
    order = np.lexsort((new_dst, new_src))
    graph = BaseGraph(n, new_src[order], new_dst[order], net.base.directed, net.base.labels)
    return InfluenceNetwork(graph, net.prob[order])


def replicate_for_advertisers(base: BaseGraph, m: int, mode: NetworkMode,
                              config: GeneratorConfig) -> List[InfluenceNetwork]:
    """Build the m advertiser networks for one of the experimental protocols."""
    if m < 1:
        raise DomainError(f"need at least one advertiser, got {m}")
    seed = config.rng_seed

    if mode == NetworkMode.INDEPENDENT:
        return [assign_lambda_probabilities(base, config.lambda_max, derive_seed(seed, j))
                for j in range(m)]

    if mode == NetworkMode.IDENTICAL:
        shared = assign_lambda_probabilities(base, config.lambda_max, derive_seed(seed, 0))
        return [shared] * m

    if mode == NetworkMode.SWAPPED:
        shared = assign_lambda_probabilities(base, config.lambda_max, derive_seed(seed, 0))
        return [node_swap_variant(shared, config.swap_parameter, base.node_count,
                                  derive_seed(seed, 1, j))
                for j in range(m)]

    if mode == NetworkMode.UNIFORM:
        if config.uniform_p is None:
            raise DomainError("uniform mode needs uniform_p")
        shared = assign_uniform_probabilities(base, config.uniform_p)
        return [shared] * m

    raise DomainError(f"unknown network mode {mode}")


def _from_networkx(graph: nx.Graph, directed: bool = False) -> BaseGraph:
    """Convert a networkx graph with integer nodes 0..n-1."""
    return BaseGraph.from_arcs(graph.number_of_nodes(), list(graph.edges()), directed)


def preferential_attachment_graph(n: int, attach: int, rng_seed: int) -> BaseGraph:
    """Undirected Barabasi-Albert graph (connected for attach >= 1)."""
    return _from_networkx(nx.barabasi_albert_graph(n, attach, seed=derive_seed(rng_seed) % (2 ** 32)))


def random_regular_graph(n: int, degree: int, rng_seed: int) -> BaseGraph:
    """Undirected random d-regular graph."""
    return _from_networkx(nx.random_regular_graph(degree, n, seed=derive_seed(rng_seed) % (2 ** 32)))


def star_graph(leaves: int, directed: bool = True) -> BaseGraph:
    """Center 0 pointing at leaves 1..leaves."""
    return BaseGraph.from_arcs(leaves + 1, [(0, i) for i in range(1, leaves + 1)], directed)


def path_graph(n: int, directed: bool = False) -> BaseGraph:
    """Path 0-1-...-(n-1)."""
    return BaseGraph.from_arcs(n, [(i, i + 1) for i in range(n - 1)], directed)


def cycle_graph(n: int, directed: bool = False) -> BaseGraph:
    """Cycle 0-1-...-(n-1)-0."""
    return BaseGraph.from_arcs(n, [(i, (i + 1) % n) for i in range(n)], directed)


def synthetic_graph(kind: str, n: int, attach: int, rng_seed: int) -> BaseGraph:
    """Desk-scale stand-in graph by name."""
    if kind == 'preferential':
        return preferential_attachment_graph(n, attach, rng_seed)
    if kind == 'regular':
        return random_regular_graph(n, max(attach, 1) * 2, rng_seed)
    if kind == 'star':
        return star_graph(n - 1)
    raise DomainError(f"unknown synthetic graph '{kind}'")


def graph_from_config(config: Config) -> BaseGraph:
    """Edge-list graph when 'graph' names a file, otherwise the synthetic stand-in."""
    path = config.get('graph')
    if path:
        return load_edge_list_file(path, config.get_bool('directed'))
    return synthetic_graph(config.get('synthetic'), config.get_int('nodes'), config.get_int('attach'),
                           derive_seed(config.get_int('seed'), STREAM_GRAPH))


def networks_from_config(config: Config, base: BaseGraph, m: Optional[int] = None,
                         mode: Optional[NetworkMode] = None) -> List[InfluenceNetwork]:
    """Advertiser networks for the configured protocol."""
    m = config.get_int('m') if m is None else m
    mode = NetworkMode(config.get('network_mode')) if mode is None else mode
    generator = GeneratorConfig(lambda_max=config.get_float('lambda_max'),
                                swap_parameter=config.get_int('swap_parameter'),
                                uniform_p=config.get_optional_float('uniform_p'),
                                rng_seed=derive_seed(config.get_int('seed'), STREAM_NETWORKS))
    return replicate_for_advertisers(base, m, mode, generator)

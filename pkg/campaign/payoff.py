"""
Advertiser payoffs and global objectives.
Value functions, reach estimators, and the revenue and penalty objectives built on them.
"""

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from campaign.allocation import Allocation, ConstraintSystem, GroundElement, is_feasible
from network.diffusion import exact_influence, sample_reach_counts
from network.graph import BaseGraph, InfluenceNetwork
from network.rrsets import RRCollection, estimate_reach
from utils.config import Config
from utils.errors import ConfigurationError, ContractViolation, DomainError
from utils.streams import derive_seed

logger = logging.getLogger(__name__)

GAIN_DECIMALS = 10  # gains are compared at this precision


@dataclass(frozen=True)
class AdvertiserProfile:
    """Budget B_j, price per exposure c_j and optional seed cap k_j."""
    budget: float = math.inf
    price: float = 1.0
    seed_cap: Optional[int] = None

    def __post_init__(self):
        """Validate ranges."""
        if math.isnan(self.budget) or self.budget < 0:
            raise DomainError(f"budget must be >= 0, got {self.budget}")
        if not self.price > 0:
            raise DomainError(f"price per exposure must be > 0, got {self.price}")
        if self.seed_cap is not None and self.seed_cap < 0:
            raise DomainError(f"seed cap must be >= 0, got {self.seed_cap}")


class ValueFunction(ABC):
    """Monotone concave map from expected reach to revenue."""

    @abstractmethod
    def __call__(self, reach):
        """Revenue of a reach (scalar or array)."""

    def exposure_value(self, reach):
        """Uncapped revenue of a reach; equals __call__ for budget-free functions."""
        return self(reach)

    def budget(self) -> float:
        """Largest attainable revenue."""
        return math.inf


class CappedLinearValue(ValueFunction):
    """min(B, c * reach)."""

    def __init__(self, budget: float, price: float):
        """Initialize capped linear value."""
        self.budget_cap = budget
        self.price = price

    def __call__(self, reach):
        if isinstance(reach, np.ndarray):
            return np.minimum(self.budget_cap, self.price * reach)
        return min(self.budget_cap, self.price * reach)

    def exposure_value(self, reach):
        return self.price * reach

    def budget(self) -> float:
        return self.budget_cap

    def __repr__(self) -> str:
        """String representation."""
        return f"CappedLinearValue(B={self.budget_cap}, c={self.price})"


def check_value_function(fn: ValueFunction, points: Sequence[float] = (0.0, 1.0, 4.0),
                         tolerance: float = 1e-12) -> None:
    """Spot-check monotonicity and concavity at three increasing reach values."""
    a, b, c = sorted(points)
    if not a < b < c:
        raise DomainError("need three distinct check points")
    fa, fb, fc = float(fn(a)), float(fn(b)), float(fn(c))
    if fa > fb + tolerance or fb > fc + tolerance:
        raise ContractViolation(f"{fn!r} is not monotone at {points}")
    if (fb - fa) / (b - a) + tolerance < (fc - fb) / (c - b):
        raise ContractViolation(f"{fn!r} is not concave at {points}")


def value_capped_linear(profile: AdvertiserProfile, reach: float) -> float:
    """min(B_j, c_j * reach)."""
    if reach < 0:
        raise DomainError(f"reach must be >= 0, got {reach}")
    return min(profile.budget, profile.price * reach)


class ProblemInstance:
    """Advertiser networks, profiles and constraints over one node set."""

    def __init__(self, networks: Sequence[InfluenceNetwork], profiles: Sequence[AdvertiserProfile],
                 constraints: ConstraintSystem,
                 value_functions: Optional[Sequence[ValueFunction]] = None,
                 graph: Optional[BaseGraph] = None):
        """Initialize problem instance; graph is the structure heuristics rank, networks[0] by default."""
        if len(networks) != len(profiles):
            raise ConfigurationError(f"{len(networks)} networks for {len(profiles)} advertisers")
        if not profiles:
            raise ConfigurationError("need at least one advertiser")
        n = networks[0].node_count
        if any(net.node_count != n for net in networks):
            raise ConfigurationError("advertiser networks must share the node set")
        if constraints.node_count != n:
            raise ConfigurationError(f"exposure bounds cover {constraints.node_count} nodes, graph has {n}")
        if constraints.has_caps and constraints.advertiser_caps.size != len(profiles):
            raise ConfigurationError("one seed cap per advertiser is required")

        self.networks = list(networks)
        self.profiles = list(profiles)
        self.constraints = constraints
        if value_functions is None:
            value_functions = [CappedLinearValue(p.budget, p.price) for p in profiles]
        elif len(value_functions) != len(profiles):
            raise ConfigurationError("one value function per advertiser is required")
        else:
            for fn in value_functions:
                check_value_function(fn)
        self.value_functions = list(value_functions)
        self.structure = networks[0].base if graph is None else graph
        if self.structure.node_count != n:
            raise ConfigurationError("structural graph does not match the node set")

    @property
    def n(self) -> int:
        """Number of nodes."""
        return self.networks[0].node_count

    @property
    def m(self) -> int:
        """Number of advertisers."""
        return len(self.profiles)

    @property
    def graph(self) -> BaseGraph:
        """Structural graph shared by all advertisers."""
        return self.structure

    def with_constraints(self, constraints: ConstraintSystem) -> 'ProblemInstance':
        """Same networks and profiles under other constraints."""
        return ProblemInstance(self.networks, self.profiles, constraints, self.value_functions,
                               self.structure)

    def __repr__(self) -> str:
        """String representation."""
        return f"ProblemInstance(n={self.n}, m={self.m}, {self.constraints})"


def build_instance(config: Config, networks: Sequence[InfluenceNetwork],
                   graph: Optional[BaseGraph] = None) -> ProblemInstance:
    """Problem instance from configuration keys and advertiser networks."""
    m = len(networks)
    n = networks[0].node_count
    budgets = config.get_list('budgets', m, float) or [math.inf] * m
    prices = config.get_list('prices', m, float)
    caps = config.get_list('seed_caps', m, int)
    exposure = config.get_list('exposure_bound', n, int)
    total = config.get('total_seeds', 10 * m)

    profiles = [AdvertiserProfile(budgets[j], prices[j], None if caps is None else caps[j])
                for j in range(m)]
    constraints = ConstraintSystem(exposure, int(total), caps)
    return ProblemInstance(networks, profiles, constraints, graph=graph)


class ReachSession:
    """Per-advertiser seed sets grown one node at a time."""

    def __init__(self, estimator: 'ReachEstimator', m: int):
        """Initialize empty session."""
        self.estimator = estimator
        self.seeds: List[set] = [set() for _ in range(m)]
        self.reaches = np.zeros(m, dtype=np.float64)

    def reach_with(self, j: int, node: int) -> float:
        """Reach of advertiser j if node were added."""
        return self.estimator.reach(j, self.seeds[j] | {node})

    def add(self, j: int, node: int) -> None:
        """Add node to advertiser j."""
        self.reaches[j] = self.reach_with(j, node)
        self.seeds[j].add(node)


class RRSession(ReachSession):
    """Session backed by covered marks of the RR collections."""

    def __init__(self, estimator: 'RRSetEstimator', m: int):
        """Initialize session and clear coverage."""
        super().__init__(estimator, m)
        self.covered_sets = np.zeros(m, dtype=np.int64)
        for coll in estimator.collections:
            coll.reset_coverage()

    def reach_with(self, j: int, node: int) -> float:
        """Reach after covering the sets containing node."""
        coll = self.estimator.collections[j]
        fresh = coll.uncovered_count(node) if node not in self.seeds[j] else 0
        return coll.n * (self.covered_sets[j] + fresh) / coll.rho

    def add(self, j: int, node: int) -> None:
        """Mark node's sets covered."""
        coll = self.estimator.collections[j]
        if node not in self.seeds[j]:
            self.covered_sets[j] += coll.mark_covered(node)
            self.seeds[j].add(node)
        self.reaches[j] = coll.n * self.covered_sets[j] / coll.rho


class ReachEstimator(ABC):
    """Expected reach of an advertiser's seed set."""

    @property
    @abstractmethod
    def m(self) -> int:
        """Number of advertisers covered."""

    @abstractmethod
    def reach(self, j: int, seeds: Iterable[int]) -> float:
        """Expected number of nodes reached by seeds in advertiser j's network."""

    def session(self) -> ReachSession:
        """Fresh incremental session."""
        return ReachSession(self, self.m)


class RRSetEstimator(ReachEstimator):
    """Reach estimated from RR set coverage."""

    def __init__(self, collections: Sequence[RRCollection]):
        """Initialize from one collection per advertiser."""
        self.collections = list(collections)

    @property
    def m(self) -> int:
        return len(self.collections)

    def reach(self, j: int, seeds: Iterable[int]) -> float:
        return estimate_reach(self.collections[j], seeds)

    def session(self) -> RRSession:
        """Session using the collections' covered marks; one writer at a time."""
        return RRSession(self, self.m)


class MonteCarloEstimator(ReachEstimator):
    """
    Reach averaged over forward cascades.

    Every seed set of advertiser j is evaluated on the same live-edge
    samples, so differences between seed sets carry no sampling noise
    from the edge draws.
    """

    def __init__(self, networks: Sequence[InfluenceNetwork], trials: int, rng_seed: int,
                 threads: int = 1):
        """Initialize Monte Carlo estimator."""
        self.networks = list(networks)
        self.trials = trials
        self.rng_seed = rng_seed
        self.threads = threads
        self._cache: Dict[Tuple[int, FrozenSet[int]], float] = {}

    @property
    def m(self) -> int:
        return len(self.networks)

    def reach(self, j: int, seeds: Iterable[int]) -> float:
        key = (j, frozenset(int(s) for s in seeds))
        if key not in self._cache:
            counts = sample_reach_counts(self.networks[j], key[1], self.trials,
                                         derive_seed(self.rng_seed, j), self.threads)
            self._cache[key] = float(counts.sum() / self.trials)
        return self._cache[key]


class ExactEstimator(ReachEstimator):
    """Exact reach by live-edge enumeration (small networks only)."""

    def __init__(self, networks: Sequence[InfluenceNetwork]):
        """Initialize exact estimator."""
        self.networks = list(networks)
        self._cache: Dict[Tuple[int, FrozenSet[int]], float] = {}

    @property
    def m(self) -> int:
        return len(self.networks)

    def reach(self, j: int, seeds: Iterable[int]) -> float:
        key = (j, frozenset(int(s) for s in seeds))
        if key not in self._cache:
            self._cache[key] = exact_influence(self.networks[j], key[1])
        return self._cache[key]


class Objective(Enum):
    """Objective maximized by an allocator."""
    REVENUE = 'revenue'
    PENALTY = 'penalty'


def check_beta(beta: float) -> None:
    """Require beta in [0, 1]."""
    if not 0.0 <= beta <= 1.0:
        raise DomainError(f"beta must lie in [0, 1], got {beta}")


def advertiser_payoff(value_fn: ValueFunction, reach: float, beta: float = 0.0) -> float:
    """V_j(reach) minus beta times the exposure value beyond the budget."""
    payoff = value_fn(reach)
    if beta:
        payoff -= beta * max(value_fn.exposure_value(reach) - value_fn.budget(), 0.0)
    return payoff


def advertiser_reaches(instance: ProblemInstance, alloc: Allocation,
                       estimator: ReachEstimator) -> np.ndarray:
    """Estimated reach of every advertiser's seed set."""
    seeds = alloc.per_advertiser(instance.m)
    return np.array([estimator.reach(j, seeds[j]) if seeds[j] else 0.0
                     for j in range(instance.m)], dtype=np.float64)


def _require_feasible(instance: ProblemInstance, alloc: Allocation) -> None:
    if not is_feasible(instance.constraints, alloc):
        raise ContractViolation(f"allocation violates the constraints: {alloc!r}")


def _payoff_terms(instance: ProblemInstance, reaches: np.ndarray) -> Tuple[List[float], List[float]]:
    """Per-advertiser revenue and overshoot of the exposure value beyond budget."""
    values, overshoot = [], []
    for fn, reach in zip(instance.value_functions, reaches.tolist()):
        values.append(fn(reach))
        overshoot.append(max(fn.exposure_value(reach) - fn.budget(), 0.0))
    return values, overshoot


def objective_revenue(instance: ProblemInstance, alloc: Allocation, estimator: ReachEstimator) -> float:
    """Revenue with budget caps applied to expected reach."""
    _require_feasible(instance, alloc)
    values, _ = _payoff_terms(instance, advertiser_reaches(instance, alloc, estimator))
    return float(sum(values))


def objective_expected_revenue(instance: ProblemInstance, alloc: Allocation, trials: int,
                               rng_seed: int, threads: int = 1) -> float:
    """Revenue with budget caps applied to every realized cascade, then averaged."""
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials}")
    seeds = alloc.per_advertiser(instance.m)
    total = 0.0
    for j, (net, fn) in enumerate(zip(instance.networks, instance.value_functions)):
        if not seeds[j]:
            continue
        counts = sample_reach_counts(net, seeds[j], trials, derive_seed(rng_seed, j), threads)
        total += float(np.sum(fn(counts.astype(np.float64))) / trials)
    return total


def penalty_objective(instance: ProblemInstance, alloc: Allocation, estimator: ReachEstimator,
                      beta: float) -> float:
    """Revenue minus beta times the total exposure value beyond budgets."""
    check_beta(beta)
    _require_feasible(instance, alloc)
    values, overshoot = _payoff_terms(instance, advertiser_reaches(instance, alloc, estimator))
    total = float(sum(values))
    if beta:
        total -= beta * float(sum(overshoot))
    return total


def marginal_gain(instance: ProblemInstance, alloc: Allocation, element: GroundElement,
                  objective: Objective, estimator: ReachEstimator, beta: float = 0.0) -> float:
    """Objective change from adding element; only the element's advertiser moves."""
    if element in alloc:
        raise ContractViolation(f"{element} is already allocated")
    if objective == Objective.PENALTY:
        check_beta(beta)
    else:
        beta = 0.0
    j = element.advertiser
    seeds = alloc.per_advertiser(instance.m)[j]
    fn = instance.value_functions[j]
    before = estimator.reach(j, seeds) if seeds else 0.0
    after = estimator.reach(j, seeds | {element.node})
    return advertiser_payoff(fn, after, beta) - advertiser_payoff(fn, before, beta)


def quantize_gain(gain: float) -> float:
    """Gain rounded for deterministic tie comparison."""
    return round(gain, GAIN_DECIMALS)


def overshoot_report(instance: ProblemInstance, alloc: Allocation,
                     estimator: ReachEstimator) -> pd.DataFrame:
    """Per-advertiser reach, exposure value, budget and positive overshoot."""
    reaches = advertiser_reaches(instance, alloc, estimator)
    _, overshoot = _payoff_terms(instance, reaches)
    seeds = alloc.per_advertiser(instance.m)
    return pd.DataFrame({
        'advertiser': np.arange(instance.m),
        'seeds': [len(s) for s in seeds],
        'reach': reaches,
        'exposure_value': [fn.exposure_value(r) for fn, r in zip(instance.value_functions, reaches.tolist())],
        'budget': [fn.budget() for fn in instance.value_functions],
        'overshoot': overshoot,
    })

"""
Dependent rounding of fractional allocations.
Turns an LP optimum into seed allocations that keep its marginals and degree bounds.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence, Set, Tuple, Union

import numpy as np
import pandas as pd

from allocators.lp import LPSolution, build_lp, solve_lp
from allocators.simplex import LPBackend
from campaign.allocation import Allocation, is_feasible
from campaign.payoff import ProblemInstance
from network.rrsets import RRCollection
from utils.errors import ConfigurationError
from utils.streams import RandomSource, as_generator, derive_seed

logger = logging.getLogger(__name__)

INTEGRAL_TOLERANCE = 1e-9
REPORT_COLUMNS = ['trial', 'rounded_objective_uncapped', 'rounded_objective_capped', 'feasible']


def _nearest_integer(value: float) -> Optional[float]:
    """The integer within tolerance of value, if any."""
    nearest = float(round(value))
    return nearest if abs(value - nearest) <= INTEGRAL_TOLERANCE else None


def _shift(rng: np.random.Generator, up: float, down: float) -> float:
    """+up with probability down / (up + down), otherwise -down; the mean is zero."""
    return up if rng.random() * (up + down) < down else -down


class _Circulation:
    """
    Fractional x values embedded in a circulation.

    Vertices are the nodes, the advertisers and two hubs S and T. Arc v -> j
    carries x_{v,j}; S -> v carries node v's exposure, j -> T carries
    advertiser j's seed count and T -> S carries the total. Flow is conserved
    at every vertex, so every vertex touching a fractional arc touches at
    least two, and the fractional arcs always contain a cycle.
    """

    def __init__(self, x: np.ndarray):
        n, m = x.shape
        self.n, self.m = n, m
        hub_s, hub_t = n + m, n + m + 1
        tails: List[int] = []
        heads: List[int] = []
        values: List[float] = []
        for v in range(n):
            for j in range(m):
                if x[v, j] > 0.0:
                    tails.append(v)
                    heads.append(n + j)
                    values.append(float(x[v, j]))
        self.x_arcs = len(values)
        exposure = x.sum(axis=1)
        seeds = x.sum(axis=0)
        for v in range(n):
            tails.append(hub_s)
            heads.append(v)
            values.append(float(exposure[v]))
        for j in range(m):
            tails.append(n + j)
            heads.append(hub_t)
            values.append(float(seeds[j]))
        tails.append(hub_t)
        heads.append(hub_s)
        values.append(float(x.sum()))

        self.tails = tails
        self.heads = heads
        self.values = values
        self.adjacency: Dict[int, Set[int]] = {}
        for arc, value in enumerate(values):
            snapped = _nearest_integer(value)
            if snapped is None:
                self.adjacency.setdefault(tails[arc], set()).add(arc)
                self.adjacency.setdefault(heads[arc], set()).add(arc)
            else:
                values[arc] = snapped

    def _settle(self, arc: int) -> None:
        """Drop an arc that became integral from the fractional graph."""
        snapped = _nearest_integer(self.values[arc])
        if snapped is None:
            return
        self.values[arc] = snapped
        for end in (self.tails[arc], self.heads[arc]):
            incident = self.adjacency.get(end)
            if incident is not None:
                incident.discard(arc)
                if not incident:
                    del self.adjacency[end]

    def _other(self, arc: int, vertex: int) -> int:
        return self.heads[arc] if self.tails[arc] == vertex else self.tails[arc]

    def _find_cycle(self) -> List[Tuple[int, int]]:
        """Arcs of a fractional cycle as (arc, +1 along the walk / -1 against)."""
        start = min(self.adjacency)
        position = {start: 0}
        walk: List[Tuple[int, int]] = []
        vertex, last = start, -1
        while True:
            options = self.adjacency[vertex] - {last}
            if not options:
                # rounding drift left a single fractional arc at this vertex
                self.values[last] = float(round(self.values[last]))
                self._settle(last)
                return []
            arc = min(options)
            sign = 1 if self.tails[arc] == vertex else -1
            walk.append((arc, sign))
            vertex, last = self._other(arc, vertex), arc
            if vertex in position:
                return walk[position[vertex]:]
            position[vertex] = len(walk)

    def round(self, rng: np.random.Generator) -> None:
        """Cancel fractional cycles until every arc is integral."""
        steps = 0
        while self.adjacency:
            cycle = self._find_cycle()
            if not cycle:
                continue
            up = min(np.ceil(self.values[a]) - self.values[a] if s > 0 else self.values[a] - np.floor(self.values[a])
                     for a, s in cycle)
            down = min(self.values[a] - np.floor(self.values[a]) if s > 0 else np.ceil(self.values[a]) - self.values[a]
                       for a, s in cycle)
            delta = _shift(rng, float(up), float(down))
            for arc, sign in cycle:
                self.values[arc] += sign * delta
            for arc, _ in cycle:
                self._settle(arc)
            steps += 1
        logger.debug("dependent rounding finished in %d cycle steps", steps)

    def selected(self) -> List[Tuple[int, int]]:
        """(node, advertiser) pairs whose x arc rounded to 1."""
        return [(self.tails[a], self.heads[a] - self.n)
                for a in range(self.x_arcs) if self.values[a] >= 0.5]


def _check_unit_matrix(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ConfigurationError("fractional allocation must be an n x m matrix")
    if x.size and (x.min() < -INTEGRAL_TOLERANCE or x.max() > 1.0 + INTEGRAL_TOLERANCE):
        raise ConfigurationError("fractional values must lie in [0, 1]")
    return np.clip(x, 0.0, 1.0)


def round_fractional(x: np.ndarray, rng_seed: RandomSource) -> Allocation:
    """Dependent rounding of an n x m matrix of fractional x values."""
    circulation = _Circulation(_check_unit_matrix(x))
    if circulation.adjacency:
        circulation.round(as_generator(rng_seed))
    return Allocation.from_pairs(circulation.selected())


def dependent_round(solution: LPSolution, rng_seed: RandomSource) -> Allocation:
    """
    Round the LP's x values.

    Each x_{v,j} becomes 1 with probability equal to its value; every node's
    exposure, every advertiser's seed count and the total round to an
    adjacent integer; edges at one vertex are negatively correlated.
    """
    return round_fractional(solution.x, rng_seed)


def _pair_round(values: np.ndarray, a: int, b: int, rng: np.random.Generator) -> None:
    """Sum-preserving rounding step on two fractional entries."""
    up = min(1.0 - values[a], values[b])
    down = min(values[a], 1.0 - values[b])
    delta = _shift(rng, up, down)
    values[a] += delta
    values[b] -= delta
    for i in (a, b):
        snapped = _nearest_integer(values[i])
        if snapped is not None:
            values[i] = snapped


def _fractional(values: np.ndarray) -> List[int]:
    return [i for i in range(values.size) if _nearest_integer(float(values[i])) is None]


def round_stars(x: np.ndarray, rng_seed: RandomSource) -> Allocation:
    """Pair rounding within each node, then across nodes, then the last lone value."""
    x = _check_unit_matrix(x).copy()
    rng = as_generator(rng_seed)
    n, m = x.shape

    leftovers: List[Tuple[int, int]] = []
    for v in range(n):
        row = x[v]
        pending = _fractional(row)
        while len(pending) > 1:
            _pair_round(row, pending[0], pending[1], rng)
            pending = _fractional(row)
        leftovers.extend((v, j) for j in pending)

    flat = np.array([x[v, j] for v, j in leftovers], dtype=np.float64)
    pending = _fractional(flat)
    while len(pending) > 1:
        _pair_round(flat, pending[0], pending[1], rng)
        pending = _fractional(flat)
    for i in pending:
        flat[i] = 1.0 if rng.random() < flat[i] else 0.0
    for (v, j), value in zip(leftovers, flat.tolist()):
        x[v, j] = value

    selected = np.argwhere(x >= 0.5)
    return Allocation.from_pairs((int(v), int(j)) for v, j in selected)


def star_round(solution: LPSolution, rng_seed: RandomSource) -> Allocation:
    """Linear-time rounding for instances without advertiser caps."""
    if solution.lp.instance.constraints.has_caps:
        raise ConfigurationError("star rounding needs an instance without advertiser caps; "
                                 "use dependent_round")
    return round_stars(solution.x, rng_seed)


def round_solution(solution: LPSolution, rng_seed: RandomSource) -> Allocation:
    """star_round when there are no caps, dependent_round otherwise."""
    if solution.lp.instance.constraints.has_caps:
        return dependent_round(solution, rng_seed)
    return star_round(solution, rng_seed)


def lp_round_allocate(instance: ProblemInstance, collections: Sequence[RRCollection], rng_seed: int,
                      solver: Union[str, LPBackend] = 'highs') -> Tuple[Allocation, float]:
    """Build, solve and round; returns the allocation and OPT_LP."""
    solution = solve_lp(build_lp(instance, collections), solver)
    alloc = round_solution(solution, rng_seed)
    logger.info("LP rounding chose %d seeds (OPT_LP %.4f)", len(alloc), solution.objective)
    return alloc, solution.objective


def rounded_revenue(solution: LPSolution, alloc: Allocation) -> Tuple[float, float]:
    """Revenue rebuilt from covered RR sets: (uncapped, capped by budgets)."""
    lp = solution.lp
    seeds = alloc.per_advertiser(lp.m)
    uncapped = capped = 0.0
    for j, (coll, profile) in enumerate(zip(lp.collections, lp.instance.profiles)):
        hit = np.zeros(coll.rho, dtype=bool)
        for v in seeds[j]:
            hit[coll.inverted_index[v]] = True
        value = coll.scale * profile.price * int(np.count_nonzero(hit))
        uncapped += value
        capped += min(profile.budget, value)
    return uncapped, capped


def _trial_row(solution: LPSolution, rng_seed: int, trial: int) -> Dict:
    alloc = round_solution(solution, derive_seed(rng_seed, trial))
    uncapped, capped = rounded_revenue(solution, alloc)
    return {'trial': trial, 'rounded_objective_uncapped': uncapped,
            'rounded_objective_capped': capped,
            'feasible': is_feasible(solution.lp.instance.constraints, alloc)}


def rounding_trials(solution: LPSolution, trials: int, rng_seed: int, threads: int = 1) -> pd.DataFrame:
    """Independent roundings of one solution; trial t uses its own derived seed."""
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            rows = list(executor.map(lambda t: _trial_row(solution, rng_seed, t), range(trials)))
    else:
        rows = [_trial_row(solution, rng_seed, t) for t in range(trials)]
    return pd.DataFrame(rows, columns=REPORT_COLUMNS)


def write_rounding_report(report: pd.DataFrame, path: str) -> None:
    """Write the rounding trials CSV."""
    report.to_csv(path, index=False)

"""
LP relaxation of seed allocation.
Builds the coverage LP from RR collections, solves it, audits the result and dumps it as text.
"""

import logging
from dataclasses import dataclass
from typing import List, Sequence, TextIO, Union

import numpy as np
import scipy.sparse as sp

from allocators.simplex import LPBackend, get_backend
from campaign.payoff import ProblemInstance
from network.rrsets import RRCollection
from utils.errors import ConfigurationError, SolverError

logger = logging.getLogger(__name__)

AUDIT_TOLERANCE = 1e-7
SNAP_TOLERANCE = 1e-9


@dataclass
class LPInstance:
    """
    maximize sum_j z_j over x (n*m), y (one per RR set) and z (m) subject to

        y_i - sum_{v in R_i} x_{v,j(i)} <= 0,  y_i <= 1
        sum_j x_{v,j} <= r_v,  sum_v x_{v,j} <= k_j,  sum x <= K
        z_j - (n / rho_j) c_j sum_{i in RR_j} y_i <= 0,  z_j <= B_j

    with 0 <= x <= 1, y >= 0, z >= 0. Rows z_j <= B_j are left out for
    unbounded budgets.
    """
    instance: ProblemInstance
    n: int
    m: int
    rhos: List[int]
    collections: List[RRCollection]
    A: sp.csr_matrix
    b: np.ndarray
    c: np.ndarray
    upper: np.ndarray
    row_names: List[str]

    @property
    def x_count(self) -> int:
        return self.n * self.m

    @property
    def y_count(self) -> int:
        return int(sum(self.rhos))

    @property
    def variable_count(self) -> int:
        return self.x_count + self.y_count + self.m

    def x_index(self, v: int, j: int) -> int:
        """Column of x_{v,j}."""
        return j * self.n + v

    def y_offset(self, j: int) -> int:
        """Column of advertiser j's first y."""
        return self.x_count + int(sum(self.rhos[:j]))

    def z_index(self, j: int) -> int:
        """Column of z_j."""
        return self.x_count + self.y_count + j

    def variable_name(self, col: int) -> str:
        """Readable name of a column."""
        if col < self.x_count:
            j, v = divmod(col, self.n)
            return f"x_{v}_{j}"
        if col < self.x_count + self.y_count:
            offset = col - self.x_count
            for j, rho in enumerate(self.rhos):
                if offset < rho:
                    return f"y_{j}_{offset}"
                offset -= rho
        return f"z_{col - self.x_count - self.y_count}"


@dataclass
class LPSolution:
    """Fractional optimum of an LPInstance."""
    lp: LPInstance
    x: np.ndarray          # shape (n, m)
    y: List[np.ndarray]    # one array per advertiser
    z: np.ndarray
    objective: float
    status: str
    backend: str

    @property
    def fractional_count(self) -> int:
        """Number of x strictly between 0 and 1."""
        return int(np.count_nonzero((self.x > 0.0) & (self.x < 1.0)))


def build_lp(instance: ProblemInstance, collections: Sequence[RRCollection]) -> LPInstance:
    """Assemble the relaxation for one collection per advertiser."""
    if len(collections) != instance.m:
        raise ConfigurationError(f"{len(collections)} RR collections for {instance.m} advertisers")
    if any(coll.n != instance.n for coll in collections):
        raise ConfigurationError("RR collections were sampled on another node set")

    n, m = instance.n, instance.m
    constraints = instance.constraints
    rhos = [coll.rho for coll in collections]
    x_count, y_count = n * m, int(sum(rhos))
    variables = x_count + y_count + m

    rows: List[np.ndarray] = []
    cols: List[np.ndarray] = []
    vals: List[np.ndarray] = []
    rhs: List[float] = []
    names: List[str] = []

    def add_rows(row_ids, col_ids, coefs, bounds, labels):
        base = len(rhs)
        rows.append(np.asarray(row_ids, dtype=np.int64) + base)
        cols.append(np.asarray(col_ids, dtype=np.int64))
        vals.append(np.asarray(coefs, dtype=np.float64))
        rhs.extend(bounds)
        names.extend(labels)

    y_offset = x_count
    for j, coll in enumerate(collections):
        lengths = np.array([s.size for s in coll.sets], dtype=np.int64)
        members = np.concatenate(coll.sets)
        local = np.arange(coll.rho)
        # y_i - sum_{v in R_i} x_{v,j} <= 0
        add_rows(np.concatenate([local, np.repeat(local, lengths)]),
                 np.concatenate([y_offset + local, j * n + members]),
                 np.concatenate([np.ones(coll.rho), -np.ones(members.size)]),
                 [0.0] * coll.rho, [f"cover_{j}_{i}" for i in range(coll.rho)])
        # y_i <= 1
        add_rows(local, y_offset + local, np.ones(coll.rho),
                 [1.0] * coll.rho, [f"ycap_{j}_{i}" for i in range(coll.rho)])
        y_offset += coll.rho

    # sum_j x_{v,j} <= r_v
    node_ids = np.tile(np.arange(n), m)
    add_rows(node_ids, np.arange(x_count), np.ones(x_count),
             constraints.exposure_bounds.astype(np.float64).tolist(), [f"node_{v}" for v in range(n)])

    if constraints.has_caps:
        add_rows(np.repeat(np.arange(m), n), np.arange(x_count), np.ones(x_count),
                 constraints.advertiser_caps.astype(np.float64).tolist(), [f"cap_{j}" for j in range(m)])

    add_rows(np.zeros(x_count), np.arange(x_count), np.ones(x_count),
             [float(constraints.total_cap)], ["total"])

    y_offset = x_count
    z_offset = x_count + y_count
    for j, coll in enumerate(collections):
        # z_j - (n / rho_j) c_j sum y <= 0
        price = instance.profiles[j].price
        add_rows(np.zeros(coll.rho + 1),
                 np.concatenate([[z_offset + j], y_offset + np.arange(coll.rho)]),
                 np.concatenate([[1.0], np.full(coll.rho, -coll.scale * price)]),
                 [0.0], [f"link_{j}"])
        y_offset += coll.rho
    for j, profile in enumerate(instance.profiles):
        if np.isfinite(profile.budget):
            add_rows([0], [z_offset + j], [1.0], [float(profile.budget)], [f"budget_{j}"])

    A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(len(rhs), variables))
    c = np.zeros(variables)
    c[z_offset:] = 1.0
    upper = np.full(variables, np.inf)
    upper[:x_count] = 1.0

    lp = LPInstance(instance, n, m, rhos, list(collections), A,
                    np.asarray(rhs, dtype=np.float64), c, upper, names)
    logger.debug("built LP with %d variables and %d rows", variables, len(rhs))
    return lp


def audit_solution(lp: LPInstance, values: np.ndarray, tolerance: float = AUDIT_TOLERANCE) -> None:
    """Independent feasibility check of a solver's point."""
    if values.shape != (lp.variable_count,) or not np.all(np.isfinite(values)):
        raise SolverError("solver returned a malformed point")
    if np.any(values < -tolerance) or np.any(values > lp.upper + tolerance):
        raise SolverError("solver point violates variable bounds")
    slack = lp.A @ values - lp.b
    if slack.size and slack.max() > tolerance:
        worst = int(np.argmax(slack))
        raise SolverError(f"solver point violates row {lp.row_names[worst]} by {slack[worst]:.3g}")


def solve_lp(lp: LPInstance, solver: Union[str, LPBackend] = 'highs') -> LPSolution:
    """Solve, audit and snap the fractional optimum."""
    backend = get_backend(solver) if isinstance(solver, str) else solver
    values, objective = backend.solve(lp.c, lp.A, lp.b, lp.upper)
    audit_solution(lp, values)

    values = np.clip(values, 0.0, lp.upper)
    near_zero = np.abs(values) <= SNAP_TOLERANCE
    near_one = np.abs(values - 1.0) <= SNAP_TOLERANCE
    values[near_zero] = 0.0
    values[near_one & (np.arange(values.size) < lp.x_count)] = 1.0

    x = values[:lp.x_count].reshape(lp.m, lp.n).T.copy()
    y = [values[lp.y_offset(j):lp.y_offset(j) + lp.rhos[j]] for j in range(lp.m)]
    z = values[lp.x_count + lp.y_count:]
    logger.info("LP optimum %.6f via %s (%d fractional x)", objective, backend.name,
                int(np.count_nonzero((x > 0) & (x < 1))))
    return LPSolution(lp, x, y, z, float(objective), 'optimal', backend.name)


def dump_lp(lp: LPInstance, stream: TextIO) -> None:
    """Write the LP as text: objective, "coef*var ... <= rhs" rows, then bounds."""
    objective = " + ".join(f"1*{lp.variable_name(col)}" for col in np.flatnonzero(lp.c).tolist())
    stream.write(f"maximize\n  obj: {objective}\nsubject to\n")
    A = lp.A.tocsr()
    for r in range(A.shape[0]):
        lo, hi = A.indptr[r], A.indptr[r + 1]
        terms = " + ".join(f"{coef:.12g}*{lp.variable_name(col)}"
                           for col, coef in zip(A.indices[lo:hi].tolist(), A.data[lo:hi].tolist()))
        stream.write(f"  {lp.row_names[r]}: {terms} <= {lp.b[r]:.12g}\n")
    stream.write("bounds\n")
    for col in range(lp.variable_count):
        upper = lp.upper[col]
        limit = "inf" if np.isinf(upper) else f"{upper:.12g}"
        stream.write(f"  0 <= {lp.variable_name(col)} <= {limit}\n")
    stream.write("end\n")


def lp_upper_bound(instance: ProblemInstance, collections: Sequence[RRCollection],
                   solver: Union[str, LPBackend] = 'highs') -> float:
    """OPT_LP for an instance."""
    return solve_lp(build_lp(instance, collections), solver).objective

"""
LP solver backends.
A reference dense-tableau simplex and a HiGHS backend behind one interface.
"""

import logging
from abc import ABC, abstractmethod
from typing import Tuple

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from utils.errors import InfeasibleError, SolverError, UnboundedError

logger = logging.getLogger(__name__)

PIVOT_TOLERANCE = 1e-9


class LPBackend(ABC):
    """Solves: maximize c.x subject to A x <= b, 0 <= x <= upper."""

    name = 'abstract'

    @abstractmethod
    def solve(self, c: np.ndarray, A: sp.spmatrix, b: np.ndarray,
              upper: np.ndarray) -> Tuple[np.ndarray, float]:
        """Optimal point and objective value; upper may hold inf."""


class SimplexBackend(LPBackend):
    """
    Dense tableau simplex with Bland's rule.

    The origin must be feasible (b >= 0), which holds for every LP built by
    this package, so no first phase is needed. Finite upper bounds become
    explicit rows.
    """

    name = 'simplex'

    def __init__(self, max_iterations: int = 100_000, tolerance: float = PIVOT_TOLERANCE):
        """Initialize simplex backend."""
        self.max_iterations = max_iterations
        self.tolerance = tolerance

    def solve(self, c, A, b, upper):
        dense = A.toarray() if sp.issparse(A) else np.asarray(A, dtype=np.float64)
        variables = c.size
        bounded = np.flatnonzero(np.isfinite(upper))
        bound_rows = np.zeros((bounded.size, variables))
        bound_rows[np.arange(bounded.size), bounded] = 1.0
        rows = np.vstack([dense, bound_rows]) if dense.size else bound_rows
        rhs = np.concatenate([np.asarray(b, dtype=np.float64), upper[bounded]])
        if np.any(rhs < 0):
            raise SolverError("the reference simplex needs b >= 0 (origin feasible)")

        count = rows.shape[0]
        tableau = np.zeros((count + 1, variables + count + 1))
        tableau[:count, :variables] = rows
        tableau[:count, variables:variables + count] = np.eye(count)
        tableau[:count, -1] = rhs
        tableau[-1, :variables] = -c
        basis = list(range(variables, variables + count))

        for iteration in range(self.max_iterations):
            entering = self._entering(tableau)
            if entering < 0:
                logger.debug("simplex converged after %d pivots", iteration)
                break
            leaving = self._leaving(tableau, entering, basis)
            if leaving < 0:
                raise UnboundedError("objective is unbounded along column %d" % entering)
            self._pivot(tableau, leaving, entering)
            basis[leaving] = entering
        else:
            raise SolverError(f"simplex hit the iteration cap ({self.max_iterations})")

        point = np.zeros(variables + count)
        point[basis] = tableau[:count, -1]
        return point[:variables], float(tableau[-1, -1])

    def _entering(self, tableau: np.ndarray) -> int:
        """Smallest-index column with negative reduced cost, or -1."""
        candidates = np.flatnonzero(tableau[-1, :-1] < -self.tolerance)
        return int(candidates[0]) if candidates.size else -1

    def _leaving(self, tableau: np.ndarray, entering: int, basis) -> int:
        """Minimum-ratio row; ties go to the smallest basic variable."""
        column = tableau[:-1, entering]
        positive = np.flatnonzero(column > self.tolerance)
        if positive.size == 0:
            return -1
        ratios = tableau[positive, -1] / column[positive]
        best = ratios.min()
        tied = positive[ratios <= best + self.tolerance]
        return int(min(tied, key=lambda row: basis[row]))

    @staticmethod
    def _pivot(tableau: np.ndarray, row: int, col: int) -> None:
        """Gauss-Jordan pivot on (row, col)."""
        tableau[row] /= tableau[row, col]
        factors = tableau[:, col].copy()
        factors[row] = 0.0
        tableau -= np.outer(factors, tableau[row])


class HighsBackend(LPBackend):
    """scipy.optimize.linprog with the HiGHS solvers."""

    name = 'highs'

    def solve(self, c, A, b, upper):
        bounds = [(0.0, None if np.isinf(u) else float(u)) for u in upper.tolist()]
        result = linprog(-c, A_ub=A if A.shape[0] else None, b_ub=b if A.shape[0] else None,
                         bounds=bounds, method='highs')
        if result.status == 2:
            raise InfeasibleError(result.message)
        if result.status == 3:
            raise UnboundedError(result.message)
        if not result.success or result.x is None:
            raise SolverError(f"HiGHS failed: {result.message}")
        return np.asarray(result.x, dtype=np.float64), float(-result.fun)


BACKENDS = {
    SimplexBackend.name: SimplexBackend,
    HighsBackend.name: HighsBackend,
}


def get_backend(name: str) -> LPBackend:
    """Backend instance by name."""
    try:
        return BACKENDS[name]()
    except KeyError:
        raise SolverError(f"unknown LP solver '{name}' (choose from {sorted(BACKENDS)})")

"""Small dense two-phase simplex (tableau form, Bland's rule).

Solves  min c·x  subject to  A x = b, x >= 0  for the handful of rows a
membership test in R^d needs. Not meant for large or sparse programs.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List

import numpy as np

from .errors import NumericError, PolytopeError

logger = logging.getLogger(__name__)

PIVOT_TOL = 1e-12
FEASIBILITY_TOL = 1e-9


class InfeasibleProblem(PolytopeError):
    """Raised when phase one cannot drive the artificial variables to zero."""


class UnboundedProblem(PolytopeError):
    """Raised when phase two finds an improving ray."""


@dataclass
class LinearProgramResult:
    x: np.ndarray
    objective: float
    pivots: int


def _pivot(tableau: np.ndarray, costs: np.ndarray, basis: List[int], row: int, col: int) -> None:
    pivot_row = tableau[row] / tableau[row, col]
    tableau -= np.outer(tableau[:, col], pivot_row)
    tableau[row] = pivot_row
    costs -= costs[col] * pivot_row
    basis[row] = col


def _run(
    tableau: np.ndarray,
    costs: np.ndarray,
    basis: List[int],
    n_columns: int,
    max_pivots: int,
) -> int:
    pivots = 0
    while True:
        improving = np.flatnonzero(costs[:n_columns] < -PIVOT_TOL)
        if improving.size == 0:
            return pivots
        col = int(improving[0])
        column = tableau[:, col]
        eligible = np.flatnonzero(column > PIVOT_TOL)
        if eligible.size == 0:
            raise UnboundedProblem(f"column {col} admits an unbounded ray")
        ratios = tableau[eligible, -1] / column[eligible]
        best = ratios.min()
        ties = eligible[ratios <= best + PIVOT_TOL * max(1.0, abs(best))]
        row = int(min(ties, key=lambda r: basis[r]))
        _pivot(tableau, costs, basis, row, col)
        pivots += 1
        if pivots > max_pivots:
            raise NumericError(f"simplex exceeded {max_pivots} pivots")


def solve_standard_form(c, A, b, max_pivots: int | None = None) -> LinearProgramResult:
    c = np.asarray(c, dtype=float)
    A = np.array(A, dtype=float, copy=True)
    b = np.array(b, dtype=float, copy=True)
    n_rows, n_cols = A.shape
    flip = b < 0.0
    A[flip] *= -1.0
    b[flip] *= -1.0
    max_pivots = max_pivots or 50 * (n_rows + n_cols)

    tableau = np.hstack([A, np.eye(n_rows), b[:, None]])
    basis = list(range(n_cols, n_cols + n_rows))
    costs = np.zeros(n_cols + n_rows + 1)
    costs[n_cols : n_cols + n_rows] = 1.0
    costs -= tableau.sum(axis=0)
    pivots = _run(tableau, costs, basis, n_cols + n_rows, max_pivots)

    infeasibility = -costs[-1]
    if infeasibility > FEASIBILITY_TOL * (1.0 + float(np.abs(b).max(initial=0.0))):
        raise InfeasibleProblem(f"phase one stopped at infeasibility {infeasibility:.3e}")

    redundant = []
    for row, var in enumerate(basis):
        if var < n_cols:
            continue
        candidates = np.flatnonzero(np.abs(tableau[row, :n_cols]) > PIVOT_TOL)
        if candidates.size:
            _pivot(tableau, costs, basis, row, int(candidates[0]))
            pivots += 1
        else:
            redundant.append(row)
    if redundant:
        keep = [row for row in range(n_rows) if row not in redundant]
        tableau = tableau[keep]
        basis = [basis[row] for row in keep]

    tableau = np.hstack([tableau[:, :n_cols], tableau[:, -1:]])
    phase_two = np.append(c, 0.0)
    for row, var in enumerate(basis):
        phase_two -= c[var] * tableau[row]
    pivots += _run(tableau, phase_two, basis, n_cols, max_pivots)

    x = np.zeros(n_cols)
    for row, var in enumerate(basis):
        x[var] = tableau[row, -1]
    logger.debug("simplex finished after %d pivots", pivots)
    return LinearProgramResult(x=x, objective=float(c @ x), pivots=pivots)


def in_convex_hull(points: np.ndarray, target: np.ndarray) -> bool:
    """Whether ``target`` is a convex combination of the rows of ``points``."""
    points = np.asarray(points, dtype=float)
    if points.shape[0] == 0:
        return False
    A = np.vstack([points.T, np.ones(points.shape[0])])
    b = np.append(np.asarray(target, dtype=float), 1.0)
    try:
        solve_standard_form(np.zeros(points.shape[0]), A, b)
    except InfeasibleProblem:
        return False
    return True

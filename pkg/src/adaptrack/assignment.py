"""Hungarian-algorithm assignment, the comparison baseline for stage 1."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from adaptrack.core import AssociationResult


@dataclass
class AssignmentProblem:
    cost: np.ndarray   # (M, N) costs, typically 1 - iou or 1 - similarity
    gate: float = 0.7  # maximum admissible cost for a returned match

    def __post_init__(self):
        self.cost = np.asarray(self.cost, dtype=np.float64)
        if self.cost.size and not np.isfinite(self.cost).all():
            raise ValueError("cost matrix must be finite")


def hungarian_solve(problem: AssignmentProblem) -> AssociationResult:
    """Minimum-total-cost one-to-one assignment, gated.

    Rectangular matrices are fine: the solver pairs min(M, N) items and the
    leftovers come back unmatched. Pairs whose cost exceeds the gate are
    stripped from the optimal assignment afterwards.
    """
    m, n = problem.cost.shape
    result = AssociationResult()
    if m == 0 or n == 0:
        result.unmatched_tracks = list(range(m))
        result.unmatched_detections = list(range(n))
        return result

    rows, cols = linear_sum_assignment(problem.cost)
    pairs = sorted(zip(rows.tolist(), cols.tolist()))
    result.matches = [(r, c) for r, c in pairs if problem.cost[r, c] <= problem.gate]
    matched_rows = {r for r, _ in result.matches}
    matched_cols = {c for _, c in result.matches}
    result.unmatched_tracks = sorted(set(range(m)) - matched_rows)
    result.unmatched_detections = sorted(set(range(n)) - matched_cols)
    return result

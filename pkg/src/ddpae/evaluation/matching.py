"""Component-to-object correspondence by minimum total distance."""
from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment


def match_components(component_positions: np.ndarray, gt_positions: np.ndarray) -> np.ndarray:
    """Optimal assignment of components to ground-truth objects.

    Both inputs are (N, 2) position arrays at the matching frame. Returns an
    array `assignment` with assignment[i] = index of the object matched to
    component i, minimizing the total Euclidean distance (solved as a linear
    assignment problem; for small N this equals brute-force search over
    permutations).
    """
    component_positions = np.atleast_2d(np.asarray(component_positions, dtype=np.float64))
    gt_positions = np.atleast_2d(np.asarray(gt_positions, dtype=np.float64))
    if component_positions.size == 0 or gt_positions.size == 0:
        raise ValueError("matching needs at least one component and one object")
    cost = np.linalg.norm(
        component_positions[:, None, :] - gt_positions[None, :, :], axis=2
    )
    rows, cols = linear_sum_assignment(cost)
    assignment = np.full(len(component_positions), -1, dtype=int)
    assignment[rows] = cols
    return assignment


def assignment_cost(
    component_positions: np.ndarray, gt_positions: np.ndarray, assignment: np.ndarray
) -> float:
    """Total Euclidean distance of an assignment (for diagnostics and tests)."""
    component_positions = np.asarray(component_positions, dtype=np.float64)
    gt_positions = np.asarray(gt_positions, dtype=np.float64)
    matched = np.asarray(assignment) >= 0
    return float(
        np.linalg.norm(
            component_positions[matched] - gt_positions[np.asarray(assignment)[matched]],
            axis=1,
        ).sum()
    )

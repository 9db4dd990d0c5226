"""Euclidean projections onto the feasible power and weight sets."""

from __future__ import annotations

import numpy as np


def project_simplex(v: np.ndarray, total: float = 1.0) -> np.ndarray:
    """Project onto {x >= 0, sum x = total} by the sorted-threshold rule."""
    v = np.asarray(v, dtype=float)
    if total <= 0:
        raise ValueError("simplex total must be positive")
    u = np.sort(v)[::-1]
    cumulative = np.cumsum(u) - total
    indices = np.arange(1, v.size + 1)
    feasible = u - cumulative / indices > 0
    rho = indices[feasible][-1]
    theta = cumulative[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


def project_simplex_rows(v: np.ndarray, total: float = 1.0) -> np.ndarray:
    """Row-wise simplex projection of a 2-D array."""
    u = np.sort(v, axis=1)[:, ::-1]
    cumulative = np.cumsum(u, axis=1) - total
    indices = np.arange(1, v.shape[1] + 1)
    feasible = u - cumulative / indices > 0
    rho = v.shape[1] - 1 - np.argmax(feasible[:, ::-1], axis=1)
    theta = cumulative[np.arange(v.shape[0]), rho] / (rho + 1)
    return np.maximum(v - theta[:, None], 0.0)


def project_power(p: np.ndarray, budget: float) -> np.ndarray:
    """Project onto {p >= 0, sum p <= budget}.

    Clamping negatives suffices when the clamped point already fits the
    budget; otherwise the projection lands on the budget face and reduces
    to the simplex projection.
    """
    if budget <= 0:
        raise ValueError("power budget must be positive")
    clamped = np.maximum(np.asarray(p, dtype=float), 0.0)
    if clamped.sum() <= budget:
        return clamped
    return project_simplex(p, budget)

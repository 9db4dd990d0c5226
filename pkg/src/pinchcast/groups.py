"""Precomputed group-membership indexing shared by the hot loops."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GroupIndex:
    """Membership structure of the user groups.

    ``matrix`` holds member indices as a (G, K_g) block when every group
    has the same size, which unlocks fully vectorized per-group reductions.
    """

    group_of: np.ndarray
    num_groups: int
    counts: np.ndarray
    selector: np.ndarray          # (K, G) one-hot
    matrix: np.ndarray | None     # (G, K_g) when uniform, else None

    @classmethod
    def build(cls, group_of: np.ndarray, num_groups: int) -> "GroupIndex":
        group_of = np.asarray(group_of)
        k = group_of.shape[0]
        counts = np.bincount(group_of, minlength=num_groups)
        selector = np.zeros((k, num_groups))
        selector[np.arange(k), group_of] = 1.0
        matrix = None
        if np.all(counts == counts[0]):
            order = np.argsort(group_of, kind="stable")
            matrix = order.reshape(num_groups, counts[0])
        return cls(group_of=group_of, num_groups=num_groups, counts=counts,
                   selector=selector, matrix=matrix)

    def minima(self, values: np.ndarray) -> np.ndarray:
        """Per-group minimum of a (K,) vector."""
        if self.matrix is not None:
            return values[self.matrix].min(axis=1)
        out = np.full(self.num_groups, np.inf)
        np.minimum.at(out, self.group_of, values)
        return out

    def min_sum(self, values: np.ndarray) -> float:
        return float(self.minima(values).sum())

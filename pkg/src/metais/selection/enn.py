"""Edited Nearest Neighbor (Wilson editing)."""

from __future__ import annotations

import numpy as np

from ..nng import knn_query
from .base import InstanceSelector, check_k, vote_rows


def enn_mask(X, y, k: int = 3, method: str = "indexed") -> np.ndarray:
    """Keep an instance iff the vote of its k nearest neighbors (self excluded) matches its label.

    Single pass over the full dataset; no cascading removals.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    check_k(len(y), k)
    idx, _ = knn_query(X, k=k, method=method, exclude_self=True)
    return vote_rows(y[idx]) == y


class ENN(InstanceSelector):
    algorithm = "enn"

    def __init__(self, k: int = 3):
        self.k = k

    def _select(self, X, y):
        return enn_mask(X, y, self.k)

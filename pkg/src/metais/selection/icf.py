"""Iterative Case Filtering (Brighton & Mellish).

The local set of a case holds the same-class cases strictly closer than its
nearest enemy (the case itself excluded). With respect to the current set:

* ``reachable(c)`` - the members of the local set of ``c``;
* ``coverage(c)`` - the cases whose local set contains ``c``.

After an ENN pass, every case with ``|reachable| > |coverage|`` is flagged and
all flagged cases are removed at once; this repeats until nothing is flagged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import InstanceSelector, check_k, chunked_distance_rows
from .enn import enn_mask


@dataclass(eq=False)
class LocalSetInfo:
    nearest_enemy_distance: np.ndarray
    local_set_members: list[np.ndarray]


def local_set_info(X, y) -> LocalSetInfo:
    """Nearest-enemy radius and explicit local-set members of every instance."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    ne = np.empty(len(y))
    members: list[np.ndarray] = []
    for s, e, D in chunked_distance_rows(X):
        rows = np.arange(s, e)
        same = y[rows, None] == y[None, :]
        enemy_d = np.where(same, np.inf, D).min(axis=1)
        ne[s:e] = enemy_d
        inside = same & (D < enemy_d[:, None])
        inside[np.arange(e - s), rows] = False
        members.extend(np.flatnonzero(r) for r in inside)
    return LocalSetInfo(ne, members)


def reachable_coverage(X, y) -> tuple[np.ndarray, np.ndarray]:
    """``(|reachable|, |coverage|)`` per instance."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    n = len(y)
    reach = np.zeros(n, dtype=np.int64)
    cover = np.zeros(n, dtype=np.int64)
    for s, e, D in chunked_distance_rows(X):
        rows = np.arange(s, e)
        same = y[rows, None] == y[None, :]
        enemy_d = np.where(same, np.inf, D).min(axis=1)
        inside = same & (D < enemy_d[:, None])
        inside[np.arange(e - s), rows] = False
        reach[s:e] = inside.sum(axis=1)
        cover += inside.sum(axis=0)
    return reach, cover


def icf_mask(X, y, k: int = 3, return_history: bool = False):
    """Keep mask after ICF; optionally also the list of per-iteration flagged indices."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    check_k(len(y), k)
    keep = enn_mask(X, y, k)
    history: list[np.ndarray] = []
    while True:
        S = np.flatnonzero(keep)
        if S.size == 0:
            break
        reach, cover = reachable_coverage(X[S], y[S])
        flagged = S[reach > cover]
        if flagged.size == 0:
            break
        history.append(flagged)
        keep[flagged] = False
    return (keep, history) if return_history else keep


class ICF(InstanceSelector):
    algorithm = "icf"

    def __init__(self, k: int = 3):
        self.k = k

    def _select(self, X, y):
        keep, self.history_ = icf_mask(X, y, self.k, return_history=True)
        return keep

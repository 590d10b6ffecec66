"""DROP3 (Wilson & Martinez): ENN noise filter followed by the DROP2 removal pass.

After the filter every survivor keeps a list of its k+1 nearest neighbors inside
the retained set S and is registered as an associate of each of them.
Survivors are visited by decreasing distance to their nearest enemy (no enemy
sorts last, ties by index). An instance P leaves S when at least as many of its
associates are classified correctly without P as with it. Removed instances
stay associates of their neighbors, so later decisions still account for them.
"""

from __future__ import annotations

import numpy as np

from ..nng import knn_query, pairwise_distances
from .base import InstanceSelector, check_k, majority_vote, nearest_enemy
from .enn import enn_mask


def drop3_visit_order(ne_dist: np.ndarray) -> list[int]:
    return sorted(range(len(ne_dist)), key=lambda i: (bool(np.isinf(ne_dist[i])), -ne_dist[i], i))


class _NeighborLists:
    """k+1 nearest retained neighbors per instance, refilled from a presorted order."""

    def __init__(self, X, k1):
        self.X = X
        n = len(X)
        self.n = n
        self.k1 = min(k1, n - 1)
        depth = min(n - 1, max(4 * k1, 32))
        self.order, _ = knn_query(X, k=depth, exclude_self=True)
        self.full: dict[int, np.ndarray] = {}
        self.lists = [self.order[a, : self.k1].tolist() for a in range(n)]
        self.ptr = [self.k1] * n

    def _row(self, a):
        return self.full.get(a, self.order[a])

    def refill(self, a, in_s) -> int | None:
        row = self._row(a)
        p = self.ptr[a]
        while True:
            if p >= len(row):
                if len(row) >= self.n - 1:
                    self.ptr[a] = p
                    return None
                d = pairwise_distances(self.X[a : a + 1], self.X)[0]
                d[a] = np.inf
                row = np.argsort(d, kind="stable")[: self.n - 1]
                self.full[a] = row
                continue
            j = int(row[p])
            p += 1
            if in_s[j]:
                self.ptr[a] = p
                return j


def drop3_mask(X, y, k: int = 3) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    check_k(len(y), k)
    keep = enn_mask(X, y, k)
    T = np.flatnonzero(keep)
    if T.size <= 1:
        return keep
    XT, yT = X[T], y[T]
    labels = yT.tolist()
    ne, _ = nearest_enemy(XT, yT)
    order = drop3_visit_order(ne)

    nb = _NeighborLists(XT, k + 1)
    in_s = np.ones(len(T), dtype=bool)
    assoc: list[list[int]] = [[] for _ in range(len(T))]
    for a, lst in enumerate(nb.lists):
        for p in lst:
            assoc[p].append(a)

    for p in order:
        with_ok = without_ok = 0
        for a in assoc[p]:
            lst = nb.lists[a]
            target = labels[a]
            with_ok += majority_vote([labels[j] for j in lst[:k]]) == target
            without_ok += majority_vote([labels[j] for j in lst if j != p][:k]) == target
        if without_ok >= with_ok:
            in_s[p] = False
            for a in assoc[p]:
                nb.lists[a].remove(p)
                new = nb.refill(a, in_s)
                if new is not None:
                    nb.lists[a].append(new)
                    assoc[new].append(a)
    keep = np.zeros(len(y), dtype=bool)
    keep[T[in_s]] = True
    return keep


class Drop3(InstanceSelector):
    algorithm = "drop3"

    def __init__(self, k: int = 3):
        self.k = k

    def _select(self, X, y):
        return drop3_mask(X, y, self.k)

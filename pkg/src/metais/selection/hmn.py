"""Hit-miss network editing, iterated (HMN-EI).

Hit-miss network of a set S: every x in S sends one edge to its nearest
neighbor in S of each class present (x itself excluded, ties by index). The
edge is a *hit* when both ends share a label and a *miss* otherwise;
``hit(t)`` / ``miss(t)`` count the incoming hits/misses of ``t``.

One HMN-E step on S:

1. removal: flag x when ``miss(x) > 0`` and ``miss(x) >= hit(x)``;
2. restore x when x and its nearest same-class neighbor h are mutual nearest
   same-class neighbors (h's hit edge points back to x);
3. restore x when every instance sending a miss edge to x is itself flagged
   by rule 1 (the only evidence against x comes from instances being removed);
4. restore every flagged member of a class whose retained members would all
   be removed (a class is never emptied).

Rules 2 and 3 are evaluated on the rule-1 flags; rule 4 runs last.

HMN-EI repeats HMN-E while the leave-one-out 1-NN accuracy over the original
training set, with the retained set as prototypes, does not decrease.
"""

from __future__ import annotations

import numpy as np

from ..nng import knn_query
from .base import InstanceSelector


def hit_miss_network(X, y, classes=None):
    """Targets and in-degrees of the hit-miss network of ``(X, y)``.

    Returns ``(targets, hit, miss)``; ``targets[i, c]`` is the nearest class-``c``
    neighbor of ``i`` (``-1`` when class ``c`` has no member other than ``i``).
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n = len(y)
    classes = np.unique(y) if classes is None else np.asarray(classes)
    n_cls = int(max(classes.max(), y.max())) + 1
    targets = np.full((n, n_cls), -1, dtype=np.int64)
    for c in classes:
        members = np.flatnonzero(y == c)
        if members.size == 0:
            continue
        others = np.flatnonzero(y != c)
        if members.size >= 2:
            i, _ = knn_query(X[members], k=1, exclude_self=True)
            targets[members, c] = members[i[:, 0]]
        if others.size:
            i, _ = knn_query(X[members], X[others], k=1)
            targets[others, c] = members[i[:, 0]]
    hit = np.zeros(n, dtype=np.int64)
    miss = np.zeros(n, dtype=np.int64)
    src, cls = np.nonzero(targets >= 0)
    tgt = targets[src, cls]
    is_hit = y[src] == cls
    np.add.at(hit, tgt[is_hit], 1)
    np.add.at(miss, tgt[~is_hit], 1)
    return targets, hit, miss


def hmn_e_flags(X, y) -> np.ndarray:
    """Instances HMN-E removes from ``(X, y)`` (boolean mask)."""
    y = np.asarray(y, dtype=np.int64)
    n = len(y)
    targets, hit, miss = hit_miss_network(X, y)
    flag = (miss > 0) & (miss >= hit)
    restore = np.zeros(n, dtype=bool)

    own = targets[np.arange(n), y]
    has_own = own >= 0
    back = np.full(n, -1, dtype=np.int64)
    back[has_own] = targets[own[has_own], y[own[has_own]]]
    restore |= flag & has_own & (back == np.arange(n))

    src, cls = np.nonzero(targets >= 0)
    tgt = targets[src, cls]
    miss_edge = y[src] != cls
    unflagged_sender = np.zeros(n, dtype=bool)
    m_src, m_tgt = src[miss_edge], tgt[miss_edge]
    unflagged_sender[m_tgt[~flag[m_src]]] = True
    restore |= flag & ~unflagged_sender

    flag &= ~restore
    for c in np.unique(y):
        members = y == c
        if flag[members].all():
            flag[members] = False
    return flag


def loo_1nn_accuracy(X, y, S) -> float:
    """Accuracy of 1-NN over all of ``X`` using rows ``S`` as prototypes, self excluded."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    S = np.asarray(S, dtype=np.int64)
    if S.size == 0:
        return 0.0
    kk = min(2, S.size)
    idx, _ = knn_query(X[S], X, k=kk)
    first = S[idx[:, 0]]
    nearest = first.copy()
    is_self = first == np.arange(len(y))
    if kk == 2:
        nearest[is_self] = S[idx[is_self, 1]]
        correct = y[nearest] == y
    else:
        correct = (y[nearest] == y) & ~is_self
    return float(correct.mean())


def hmnei_mask(X, y, n_classes: int | None = None, return_history: bool = False):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n = len(y)
    c = int(y.max()) + 1 if n_classes is None else n_classes
    counts = np.bincount(y, minlength=c)
    if np.any(counts == 0):
        raise ValueError(f"class {int(np.flatnonzero(counts == 0)[0])} has no members")
    if n < c + 1:
        raise ValueError(f"need n >= c+1 instances, got n={n}, c={c}")
    S = np.arange(n)
    acc = loo_1nn_accuracy(X, y, S)
    history = [(S.size, acc)]
    while True:
        flags = hmn_e_flags(X[S], y[S])
        if not flags.any():
            break
        S_new = S[~flags]
        acc_new = loo_1nn_accuracy(X, y, S_new)
        if acc_new < acc:
            break
        S, acc = S_new, acc_new
        history.append((S.size, acc))
    keep = np.zeros(n, dtype=bool)
    keep[S] = True
    return (keep, history) if return_history else keep


class HMNEI(InstanceSelector):
    algorithm = "hmnei"

    def __init__(self, k: int | None = None):
        # the hit-miss network is a 1-NN-per-class structure; k is accepted for a uniform interface
        self.k = k

    def _select(self, X, y):
        keep, self.history_ = hmnei_mask(X, y, return_history=True)
        return keep

"""Class Conditional Instance Selection (CCIS).

Two class-conditional k-NN graphs are built: within-class (each instance points
to its k nearest same-class instances) and between-class (k nearest instances of
any other class). Their in-degrees, normalised to sum to one, give the
distributions ``p_w`` and ``p_b``. With the pointwise K-divergence term

    K(p1, p2)(a) = p1(a) * ln(2 p1(a) / (p1(a) + p2(a)))     (0 when p1(a) = 0)

the score is ``K(p_w, p_b)(a) - K(p_b, p_w)(a)``. High scores mark instances
that mostly attract their own class.

CC step: S starts with the best-scored instance of every class; the remaining
instances are added in decreasing score order (ties by index) while the 1-NN
error on the training set using S as prototypes (self excluded) exceeds the
leave-one-out 1-NN error of the full training set.

THIN step: S_f keeps the members of S that receive a between-class edge in the
graph built on S alone. The other members of S are then visited in decreasing
score order and added to S_f when 1-NN over the current S_f misclassifies them.
If S_f has a larger training error than S, S is returned instead.
"""

from __future__ import annotations

import numpy as np

from ..nng import knn_query, pairwise_distances
from .base import InstanceSelector


def class_conditional_degrees(X, y, k: int = 3) -> tuple[np.ndarray, np.ndarray]:
    """In-degrees ``(in_w, in_b)`` of the within- and between-class k-NN graphs."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n = len(y)
    in_w = np.zeros(n, dtype=np.int64)
    in_b = np.zeros(n, dtype=np.int64)
    for c in np.unique(y):
        members = np.flatnonzero(y == c)
        others = np.flatnonzero(y != c)
        kw = min(k, members.size - 1)
        if kw > 0:
            idx, _ = knn_query(X[members], k=kw, exclude_self=True)
            np.add.at(in_w, members[idx.ravel()], 1)
        kb = min(k, others.size)
        if kb > 0:
            idx, _ = knn_query(X[others], X[members], k=kb)
            np.add.at(in_b, others[idx.ravel()], 1)
    return in_w, in_b


def k_divergence_terms(p1: np.ndarray, p2: np.ndarray) -> np.ndarray:
    p1 = np.asarray(p1, dtype=np.float64)
    p2 = np.asarray(p2, dtype=np.float64)
    out = np.zeros_like(p1)
    pos = p1 > 0
    out[pos] = p1[pos] * np.log(2.0 * p1[pos] / (p1[pos] + p2[pos]))
    return out


def ccis_scores(X, y, k: int = 3) -> np.ndarray:
    in_w, in_b = class_conditional_degrees(X, y, k)
    p_w = in_w / in_w.sum() if in_w.sum() else in_w.astype(np.float64)
    p_b = in_b / in_b.sum() if in_b.sum() else in_b.astype(np.float64)
    return k_divergence_terms(p_w, p_b) - k_divergence_terms(p_b, p_w)


def score_order(score: np.ndarray) -> np.ndarray:
    """Indices by decreasing score, ties by index."""
    return np.lexsort((np.arange(len(score)), -score))


class _Prototype1NN:
    """1-NN over a growing prototype set, evaluated on fixed query rows (self excluded)."""

    def __init__(self, X, y, queries):
        self.X = X
        self.y = y
        self.q = np.asarray(queries, dtype=np.int64)
        self.best_d = np.full(self.q.size, np.inf)
        self.best_i = np.full(self.q.size, -1, dtype=np.int64)

    def add(self, j: int) -> None:
        d = pairwise_distances(self.X[self.q], self.X[j : j + 1])[:, 0]
        d[self.q == j] = np.inf
        better = (d < self.best_d) | ((d == self.best_d) & (j < self.best_i) & np.isfinite(d))
        self.best_d[better] = d[better]
        self.best_i[better] = j

    def wrong(self) -> np.ndarray:
        bi = self.best_i
        return (bi < 0) | (self.y[np.maximum(bi, 0)] != self.y[self.q])

    def error(self) -> float:
        return float(self.wrong().mean())


def _train_error(X, y, S) -> float:
    nn = _Prototype1NN(X, y, np.arange(len(y)))
    for j in S:
        nn.add(int(j))
    return nn.error()


def _check(y):
    counts = np.bincount(y)
    present = counts[counts > 0]
    if len(y) < 2 or present.size < 2:
        raise ValueError("need n >= 2 and at least 2 classes")
    if present.min() < 2:
        raise ValueError(f"class {int(np.flatnonzero((counts > 0) & (counts < 2))[0])} has fewer than 2 members")


def ccis_cc(X, y, k: int = 3, score=None) -> np.ndarray:
    """Indices selected by the CC step, in insertion order."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    score = ccis_scores(X, y, k) if score is None else score
    order = score_order(score)
    target = _train_error(X, y, np.arange(len(y)))
    nn = _Prototype1NN(X, y, np.arange(len(y)))
    S: list[int] = []
    seen: set[int] = set()
    for i in order:
        if int(y[i]) not in seen:
            seen.add(int(y[i]))
            S.append(int(i))
    for j in S:
        nn.add(j)
    in_s = np.zeros(len(y), dtype=bool)
    in_s[S] = True
    for i in order:
        if nn.error() <= target:
            break
        if in_s[i]:
            continue
        in_s[i] = True
        S.append(int(i))
        nn.add(int(i))
    return np.asarray(S, dtype=np.int64)


def ccis_thin(X, y, S, k: int = 3, score=None) -> np.ndarray:
    """Thinned subset of ``S`` (global indices, sorted)."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    S = np.sort(np.asarray(S, dtype=np.int64))
    score = ccis_scores(X, y, k) if score is None else score
    if np.unique(y[S]).size < 2:
        return S
    _, in_b = class_conditional_degrees(X[S], y[S], k)
    in_f = np.zeros(len(y), dtype=bool)
    in_f[S[in_b > 0]] = True
    rest = S[in_b == 0]
    rest = rest[score_order(score[rest])]
    nn = _Prototype1NN(X, y, rest)
    for j in np.flatnonzero(in_f):
        nn.add(int(j))
    pos = {int(r): t for t, r in enumerate(rest)}
    for r in rest:
        t = pos[int(r)]
        bi = nn.best_i[t]
        if bi < 0 or y[bi] != y[r]:
            in_f[r] = True
            nn.add(int(r))
    S_f = np.flatnonzero(in_f)
    if _train_error(X, y, S_f) > _train_error(X, y, S):
        return S
    return S_f


def ccis_mask(X, y, k: int = 3) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    _check(y)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    score = ccis_scores(X, y, k)
    S = ccis_cc(X, y, k, score)
    S = ccis_thin(X, y, S, k, score)
    keep = np.zeros(len(y), dtype=bool)
    keep[S] = True
    return keep


class CCIS(InstanceSelector):
    algorithm = "ccis"

    def __init__(self, k: int = 3):
        self.k = k

    def _select(self, X, y):
        return ccis_mask(X, y, self.k)

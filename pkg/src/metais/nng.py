"""Exact k-nearest-neighbor graphs under normalized squared Euclidean distance.

Distance between two m-dimensional vectors is ``sum((a - b) ** 2) / m``. Every
code path accumulates the per-feature squares in column order, so the brute and
tree-indexed searches produce bit-identical distances. Ties are broken by
ascending index.

Graph cache format (``.npz``, written by :func:`save_graph`)::

    format      str    "metais-nng"
    version     int    1
    k_max       int    requested neighborhood size (after clipping)
    indices     int64  (n, k) neighbor ids, row i sorted by (distance, id)
    distances   float  (n, k) normalized squared distances
    labels      int64  (n,)   class ids of the source dataset
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

__all__ = [
    "NeighborGraph",
    "GraphWarning",
    "build_graph",
    "distance",
    "knn_query",
    "load_graph",
    "pairwise_distances",
    "save_graph",
    "truncate",
]

_CHUNK_ELEMS = 1 << 22


class GraphWarning(UserWarning):
    pass


def distance(a, b, m: int | None = None) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 1 or a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    if m is None:
        m = a.shape[0]
    if m != a.shape[0] or m < 1:
        raise ValueError(f"feature count {m} does not match vector length {a.shape[0]}")
    acc = 0.0
    for j in range(m):
        diff = float(a[j]) - float(b[j])
        acc += diff * diff
    return acc / m


def pairwise_distances(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Normalized squared distances between rows of ``A`` and rows of ``B``."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    m = A.shape[1]
    out = np.zeros((A.shape[0], B.shape[0]))
    for j in range(m):
        diff = A[:, j, None] - B[None, :, j]
        out += diff * diff
    out /= m
    return out


def _gathered_distances(X: np.ndarray, Q: np.ndarray, cand: np.ndarray) -> np.ndarray:
    # d(Q[i], X[cand[i, c]]) with the same operation order as pairwise_distances
    m = X.shape[1]
    out = np.zeros(cand.shape)
    for j in range(m):
        diff = Q[:, j, None] - X[cand, j]
        out += diff * diff
    out /= m
    return out


def _row_chunks(n_rows: int, n_cols: int):
    step = max(1, _CHUNK_ELEMS // max(1, n_cols))
    for start in range(0, n_rows, step):
        yield start, min(n_rows, start + step)


def _brute_query(X, Q, k, exclude):
    n_ref = X.shape[0]
    idx = np.empty((Q.shape[0], k), dtype=np.int64)
    dist = np.empty((Q.shape[0], k))
    for s, e in _row_chunks(Q.shape[0], n_ref):
        D = pairwise_distances(Q[s:e], X)
        if exclude is not None:
            D[np.arange(e - s), exclude[s:e]] = np.inf
        order = np.argsort(D, axis=1, kind="stable")[:, :k]
        idx[s:e] = order
        dist[s:e] = np.take_along_axis(D, order, axis=1)
    return idx, dist


def _sort_candidates(cand, d, k):
    order = np.lexsort((cand, d), axis=-1)[..., :k]
    return np.take_along_axis(cand, order, -1), np.take_along_axis(d, order, -1)


def _indexed_query(X, Q, k, exclude, tree=None):
    n_ref = X.shape[0]
    need = k + (1 if exclude is not None else 0)
    q = min(need + 1, n_ref)
    if tree is None:
        tree = cKDTree(X)
    if q == n_ref:
        cand = np.broadcast_to(np.arange(n_ref), (Q.shape[0], n_ref)).copy()
        safe = np.ones(Q.shape[0], dtype=bool)
    else:
        dd, cand = tree.query(Q, k=q)
        cand = cand.astype(np.int64)
        safe = dd[:, need] > dd[:, need - 1] * (1.0 + 1e-9)
    idx = np.empty((Q.shape[0], k), dtype=np.int64)
    dist = np.empty((Q.shape[0], k))
    rows = np.flatnonzero(safe)
    if rows.size:
        c = cand[rows]
        d = _gathered_distances(X, Q[rows], c)
        if exclude is not None:
            d[c == exclude[rows, None]] = np.inf
        idx[rows], dist[rows] = _sort_candidates(c, d, k)
    for r in np.flatnonzero(~safe):
        # boundary tie: gather everything up to the tied radius
        radius = dd[r, need - 1] * (1.0 + 1e-9)
        c = np.asarray(tree.query_ball_point(Q[r], radius), dtype=np.int64)
        d = _gathered_distances(X, Q[r:r + 1], c[None, :])[0]
        if exclude is not None:
            d[c == exclude[r]] = np.inf
        idx[r], dist[r] = _sort_candidates(c, d, k)
    return idx, dist


def knn_query(X, Q=None, k: int = 1, method: str = "indexed", exclude_self: bool = False, tree=None):
    """The ``k`` nearest rows of ``X`` for each row of ``Q`` (default ``Q = X``).

    With ``exclude_self`` the query row ``i`` never returns reference row ``i``;
    requires ``Q is X``. Returns ``(indices, distances)`` of shape ``(len(Q), k)``.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    Q = X if Q is None else np.ascontiguousarray(Q, dtype=np.float64)
    if X.ndim != 2 or Q.ndim != 2 or X.shape[1] != Q.shape[1]:
        raise ValueError("reference and query must be 2-D with equal feature counts")
    exclude = None
    available = X.shape[0]
    if exclude_self:
        if Q.shape[0] != X.shape[0]:
            raise ValueError("exclude_self requires queries equal to the reference set")
        exclude = np.arange(X.shape[0])
        available -= 1
    if k < 1 or k > available:
        raise ValueError(f"k={k} outside 1..{available}")
    if method == "brute":
        return _brute_query(X, Q, k, exclude)
    if method == "indexed":
        return _indexed_query(X, Q, k, exclude, tree)
    raise ValueError(f"unknown method {method!r}")


@dataclass(frozen=True, eq=False)
class NeighborGraph:
    """Per-vertex neighbor lists sorted by (distance, index), self excluded."""

    k_max: int
    indices: np.ndarray
    distances: np.ndarray
    labels: np.ndarray

    @property
    def n_vertices(self) -> int:
        return self.indices.shape[0]

    def neighbors(self, i: int) -> list[tuple[int, float]]:
        return list(zip(self.indices[i].tolist(), self.distances[i].tolist()))

    def equals(self, other: "NeighborGraph") -> bool:
        return (
            self.k_max == other.k_max
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.distances, other.distances)
            and np.array_equal(self.labels, other.labels)
        )


def _as_xy(data, labels=None):
    if hasattr(data, "features") and hasattr(data, "labels"):
        return np.asarray(data.features, dtype=np.float64), np.asarray(data.labels)
    X = np.asarray(data, dtype=np.float64)
    y = np.zeros(X.shape[0], dtype=np.int64) if labels is None else np.asarray(labels)
    return X, y


def build_graph(data, k_max: int, method: str = "indexed", labels=None) -> NeighborGraph:
    """Build the kNN graph of a dataset (or a feature matrix plus ``labels``)."""
    X, y = _as_xy(data, labels)
    n = X.shape[0]
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    if n < 2:
        raise ValueError("need at least two instances to build a neighbor graph")
    if k_max > n - 1:
        warnings.warn(f"k_max={k_max} clipped to n-1={n - 1}", GraphWarning, stacklevel=2)
        k_max = n - 1
    idx, dist = knn_query(X, k=k_max, method=method, exclude_self=True)
    for a in (idx, dist):
        a.setflags(write=False)
    y = np.array(y, dtype=np.int64)
    y.setflags(write=False)
    return NeighborGraph(k_max, idx, dist, y)


def truncate(g: NeighborGraph, k: int) -> NeighborGraph:
    """Prefix view of every neighbor list; no recomputation."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > g.k_max:
        raise ValueError(f"k={k} exceeds graph k_max={g.k_max}")
    return NeighborGraph(k, g.indices[:, :k], g.distances[:, :k], g.labels)


def save_graph(g: NeighborGraph, path) -> None:
    with open(path, "wb") as fh:
        np.savez(
            fh,
            format=np.array("metais-nng"),
            version=np.array(1),
            k_max=np.array(g.k_max),
            indices=g.indices,
            distances=g.distances,
            labels=g.labels,
        )


def load_graph(path) -> NeighborGraph:
    with np.load(path, allow_pickle=False) as z:
        if str(z["format"]) != "metais-nng":
            raise ValueError(f"{path}: not a neighbor-graph cache")
        if int(z["version"]) != 1:
            raise ValueError(f"{path}: unsupported cache version {int(z['version'])}")
        return NeighborGraph(int(z["k_max"]), z["indices"], z["distances"], z["labels"])

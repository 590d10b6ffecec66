"""Shared pieces of the reference instance-selection algorithms."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted, check_X_y

from ..nng import knn_query, pairwise_distances

__all__ = [
    "InstanceSelector",
    "SelectionMask",
    "majority_vote",
    "nearest_enemy",
    "reduction_stats",
    "vote_rows",
    "write_mask",
]


@dataclass(eq=False)
class SelectionMask:
    keep: np.ndarray
    algorithm: str
    k: int | None = None
    wall_time_ms: float | None = None

    def __post_init__(self):
        self.keep = np.asarray(self.keep, dtype=bool)

    @property
    def n(self) -> int:
        return int(self.keep.size)

    @property
    def n_kept(self) -> int:
        return int(self.keep.sum())

    @property
    def reduction_rate(self) -> float:
        return reduction_stats(self)[2]

    @property
    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.keep)


def reduction_stats(mask: SelectionMask | np.ndarray) -> tuple[int, int, float]:
    """``(n, n_kept, (n - n_kept) / n)``."""
    keep = mask.keep if isinstance(mask, SelectionMask) else np.asarray(mask, dtype=bool)
    n = int(keep.size)
    kept = int(keep.sum())
    return n, kept, (n - kept) / n if n else 0.0


def write_mask(mask: SelectionMask, csv_path, json_path=None, include_time: bool = True) -> None:
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write("index,keep\n")
        for i, v in enumerate(mask.keep.tolist()):
            fh.write(f"{i},{int(v)}\n")
    if json_path is not None:
        n, kept, rr = reduction_stats(mask)
        meta = {"algorithm": mask.algorithm, "k": mask.k, "n": n, "n_kept": kept, "reduction_rate": rr}
        if include_time:
            meta["wall_time_ms"] = mask.wall_time_ms
        with open(json_path, "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")


def majority_vote(labels) -> int | None:
    """Most frequent label; ties go to the tied label met first (i.e. the nearest)."""
    if len(labels) == 0:
        return None
    counts: dict[int, int] = {}
    for lab in labels:
        counts[lab] = counts.get(lab, 0) + 1
    best = max(counts.values())
    for lab in labels:
        if counts[lab] == best:
            return lab
    return None  # unreachable


def vote_rows(L: np.ndarray) -> np.ndarray:
    """Row-wise :func:`majority_vote` for a label matrix ordered nearest-first."""
    L = np.asarray(L, dtype=np.int64)
    n, k = L.shape
    n_cls = int(L.max()) + 1 if L.size else 1
    counts = np.zeros((n, n_cls), dtype=np.int64)
    first = np.full((n, n_cls), k, dtype=np.int64)
    rows = np.arange(n)
    for j in range(k - 1, -1, -1):
        counts[rows, L[:, j]] += 1
        first[rows, L[:, j]] = j
    best = counts.max(axis=1, keepdims=True)
    pos = np.where(counts == best, first, k + 1)
    return pos.argmin(axis=1)


def nearest_enemy(X: np.ndarray, y: np.ndarray, method: str = "indexed") -> tuple[np.ndarray, np.ndarray]:
    """Distance and index of each instance's nearest different-class instance.

    Instances without any enemy get ``(inf, -1)``.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    n = len(y)
    dist = np.full(n, np.inf)
    idx = np.full(n, -1, dtype=np.int64)
    for c in np.unique(y):
        members = np.flatnonzero(y == c)
        others = np.flatnonzero(y != c)
        if others.size == 0:
            continue
        i, d = knn_query(X[others], X[members], k=1, method=method)
        dist[members] = d[:, 0]
        idx[members] = others[i[:, 0]]
    return dist, idx


def chunked_distance_rows(X: np.ndarray, rows: np.ndarray | None = None, chunk_elems: int = 1 << 22):
    """Yield ``(start, stop, D)`` blocks of the distance matrix between ``X[rows]`` and ``X``."""
    rows = np.arange(len(X)) if rows is None else rows
    step = max(1, chunk_elems // max(1, len(X)))
    for s in range(0, len(rows), step):
        e = min(len(rows), s + step)
        yield s, e, pairwise_distances(X[rows[s:e]], X)


class InstanceSelector(BaseEstimator):
    """Base class: ``fit(X, y)`` computes the keep mask, ``fit_resample`` returns the subset."""

    algorithm = "base"

    def _select(self, X, y) -> np.ndarray:
        raise NotImplementedError

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        y = _encode(y)
        t0 = time.perf_counter()
        keep = self._select(X, y)
        elapsed = (time.perf_counter() - t0) * 1e3
        self.keep_mask_ = np.asarray(keep, dtype=bool)
        self.sample_indices_ = np.flatnonzero(self.keep_mask_)
        self.selection_ = SelectionMask(self.keep_mask_, self.algorithm, getattr(self, "k", None), elapsed)
        return self

    def fit_resample(self, X, y):
        self.fit(X, y)
        X = np.asarray(X)
        y = np.asarray(y)
        return X[self.sample_indices_], y[self.sample_indices_]

    @property
    def reduction_rate_(self) -> float:
        check_is_fitted(self, "keep_mask_")
        return self.selection_.reduction_rate


def _encode(y) -> np.ndarray:
    _, inv = np.unique(np.asarray(y), return_inverse=True)
    return inv.astype(np.int64)


def check_k(n: int, k: int) -> None:
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if n <= k:
        raise ValueError(f"need more than k={k} instances, got n={n}")

"""Per-instance meta-features of the nearest-neighbor graph.

For every vertex and every ``k`` in the k-list, the k-prefix of its neighbor
list yields eight descriptors: mean/min distance to same-class, opposite-class
and any neighbors, plus the same/opposite neighbor counts. A class-conditional
mean or min over an empty subset is stored as the literal value ``-1``.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .nng import GraphWarning, NeighborGraph, build_graph, truncate

__all__ = [
    "DEFAULT_K_LIST",
    "DESCRIPTORS",
    "MISSING",
    "MetaDataset",
    "NNGMetaFeatures",
    "extract",
    "feature_names",
    "read_meta_csv",
    "write_meta_csv",
]

DEFAULT_K_LIST: tuple[int, ...] = (3, 5, 9, 15, 23, 33)
DESCRIPTORS: tuple[str, ...] = (
    "avg_dist_same",
    "avg_dist_opposite",
    "avg_dist_any",
    "min_dist_same",
    "min_dist_opposite",
    "min_dist_any",
    "count_same",
    "count_opposite",
)
MISSING = -1.0


def feature_names(k_list: Sequence[int] = DEFAULT_K_LIST) -> list[str]:
    """Column names, descriptor-major then ascending k."""
    return [f"{d}@k={k}" for d in DESCRIPTORS for k in k_list]


def parse_feature_name(name: str) -> tuple[str, int]:
    desc, _, k = name.partition("@k=")
    return desc, int(k)


@dataclass(eq=False)
class MetaDataset:
    """Meta-feature matrix with optional keep labels (1 = keep) and per-row source tags."""

    records: np.ndarray
    feature_names: list[str]
    labels: np.ndarray | None = None
    sources: np.ndarray | None = None
    source_name: str = ""

    def __post_init__(self):
        self.records = np.asarray(self.records, dtype=np.float64)
        n = self.records.shape[0]
        if self.records.ndim != 2 or self.records.shape[1] != len(self.feature_names):
            raise ValueError("records do not match feature_names")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (n,):
                raise ValueError("labels length mismatch")
        if self.sources is None:
            self.sources = np.full(n, self.source_name, dtype=object)
        else:
            self.sources = np.asarray(self.sources, dtype=object)

    def __len__(self) -> int:
        return self.records.shape[0]

    @property
    def source_names(self) -> list[str]:
        seen: dict[str, None] = {}
        for s in self.sources.tolist():
            seen.setdefault(s, None)
        return list(seen)

    @staticmethod
    def concat(parts: Sequence["MetaDataset"]) -> "MetaDataset":
        if not parts:
            raise ValueError("nothing to concatenate")
        names = parts[0].feature_names
        for p in parts[1:]:
            if p.feature_names != names:
                raise ValueError("meta-datasets have different feature columns")
        labels = None
        if all(p.labels is not None for p in parts):
            labels = np.concatenate([p.labels for p in parts])
        return MetaDataset(
            np.vstack([p.records for p in parts]),
            list(names),
            labels,
            np.concatenate([p.sources for p in parts]),
            "+".join(p.source_name for p in parts),
        )


def extract(g: NeighborGraph, k_list: Sequence[int] = DEFAULT_K_LIST, source_name: str = "") -> MetaDataset:
    """Compute the ``8 * len(k_list)`` meta-features for every vertex of ``g``."""
    k_list = [int(k) for k in k_list]
    if not k_list or any(b <= a for a, b in zip(k_list, k_list[1:])):
        raise ValueError("k_list must be non-empty and strictly ascending")
    if k_list[0] < 1:
        raise ValueError("k values must be >= 1")
    if k_list[-1] > g.k_max:
        # a complete graph (k_max = n-1) of a tiny dataset is clipped, anything else is an error
        if g.k_max != g.n_vertices - 1:
            raise ValueError(f"k_list maximum {k_list[-1]} exceeds graph k_max={g.k_max}")
        warnings.warn(
            f"only {g.k_max} neighbors available; k values above it are clipped", GraphWarning, stacklevel=2
        )
    n = g.n_vertices
    y = np.asarray(g.labels)
    neigh_same = y[g.indices] == y[:, None]
    D = g.distances
    n_k = len(k_list)
    out = np.empty((n, len(DESCRIPTORS) * n_k))
    for col, k in enumerate(k_list):
        k_eff = min(k, D.shape[1])
        d = D[:, :k_eff]
        same = neigh_same[:, :k_eff]
        opp = ~same
        c_same = same.sum(axis=1)
        c_opp = k_eff - c_same
        s_same = np.where(same, d, 0.0).sum(axis=1)
        s_opp = np.where(opp, d, 0.0).sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            avg_same = np.where(c_same > 0, s_same / np.maximum(c_same, 1), MISSING)
            avg_opp = np.where(c_opp > 0, s_opp / np.maximum(c_opp, 1), MISSING)
        min_same = np.where(c_same > 0, np.where(same, d, np.inf).min(axis=1), MISSING)
        min_opp = np.where(c_opp > 0, np.where(opp, d, np.inf).min(axis=1), MISSING)
        values = (
            avg_same,
            avg_opp,
            d.mean(axis=1),
            min_same,
            min_opp,
            d[:, 0],
            c_same.astype(np.float64),
            c_opp.astype(np.float64),
        )
        for di, v in enumerate(values):
            out[:, di * n_k + col] = v
    return MetaDataset(out, feature_names(k_list), source_name=source_name)


class NNGMetaFeatures(TransformerMixin, BaseEstimator):
    """Transformer mapping a labeled feature matrix to its graph meta-features.

    The transform needs the class labels, so ``transform(X, y)`` takes both;
    there is nothing to learn in ``fit``.
    """

    def __init__(self, k_list=DEFAULT_K_LIST, graph_method: str = "indexed"):
        self.k_list = k_list
        self.graph_method = graph_method

    def fit(self, X, y=None):
        self.n_features_out_ = len(DESCRIPTORS) * len(self.k_list)
        return self

    def transform(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        k_max = max(self.k_list)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", GraphWarning)
            g = build_graph(X, min(k_max, X.shape[0] - 1), self.graph_method, labels=y)
            return extract(g, self.k_list).records

    def fit_transform(self, X, y=None, **fit_params):
        if y is None:
            raise ValueError("graph meta-features require class labels")
        return self.fit(X, y).transform(X, y)

    def get_feature_names_out(self, input_features=None):
        return np.asarray(feature_names(self.k_list), dtype=object)


def dataset_meta(d, k_list: Sequence[int] = DEFAULT_K_LIST, method: str = "indexed") -> MetaDataset:
    """Graph + meta-features of a :class:`~metais.dataset.Dataset` (unlabeled)."""
    k_max = max(k_list)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GraphWarning)
        g = build_graph(d, min(k_max, d.n_samples - 1), method)
    if g.k_max < k_max:
        warnings.warn(f"{d.name}: n={d.n_samples} is below max k={k_max}; k clipped", GraphWarning, stacklevel=2)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", GraphWarning)
            return extract(g, k_list, source_name=d.name)
    return extract(truncate(g, k_max), k_list, source_name=d.name)


def write_meta_csv(meta: MetaDataset, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        cols = list(meta.feature_names) + (["label"] if meta.labels is not None else []) + ["source"]
        w.writerow(cols)
        for i in range(len(meta)):
            row = [repr(float(v)) for v in meta.records[i]]
            if meta.labels is not None:
                row.append(str(int(meta.labels[i])))
            row.append(meta.sources[i])
            w.writerow(row)


def read_meta_csv(path) -> MetaDataset:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if header[-1] != "source":
        raise ValueError(f"{path}: missing mandatory 'source' column")
    has_label = len(header) >= 2 and header[-2] == "label"
    n_feat = len(header) - 1 - int(has_label)
    rec = np.array([[float(v) for v in r[:n_feat]] for r in body]).reshape(len(body), n_feat)
    labels = np.array([int(r[n_feat]) for r in body], dtype=np.int64) if has_label else None
    sources = np.array([r[-1] for r in body], dtype=object)
    return MetaDataset(rec, header[:n_feat], labels, sources, Path(path).stem)

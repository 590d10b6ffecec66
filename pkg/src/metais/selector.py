"""Meta-instance selection: learn keep/remove decisions from graph meta-features.

Training: every source dataset is turned into a meta-set (one row of
meta-features per instance, label 1 when the reference algorithm keeps the
instance), each meta-set is z-scored on its own statistics, and the merged rows
train a forest. Application: the query dataset is turned into a meta-set the
same way, the forest returns the keep-probability ``p_j`` of every instance and
instance ``j`` is kept iff ``p_j >= theta``.

A selector bundle is a directory holding ``model.json`` (the forest, see
:mod:`metais.forest.ensemble`) and ``metadata.json``.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted, check_X_y

from .dataset import Dataset, ScalingParams
from .forest import BalancedRandomForest, RandomForest, from_json
from .metafeatures import DEFAULT_K_LIST, MetaDataset, dataset_meta, feature_names
from .selection import ALGORITHMS, SelectionMask

BUNDLE_FORMAT = "metais-selector"
BUNDLE_VERSION = 1
DEFAULT_THETAS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
CLASSIFIERS = {"rf": RandomForest, "balanced_rf": BalancedRandomForest}


class ReferenceFailure(RuntimeError):
    """The reference algorithm failed on one of the training datasets."""

    def __init__(self, dataset: str, algorithm: str, cause: Exception):
        self.dataset = dataset
        self.algorithm = algorithm
        super().__init__(f"{algorithm} failed on dataset {dataset!r}: {cause}")


def zscore(records: np.ndarray) -> np.ndarray:
    return ScalingParams.fit(records).apply(records)


def _labeled_meta(d: Dataset, ref_algo: str, k: int, k_list, graph_method: str) -> tuple[MetaDataset, np.ndarray]:
    try:
        keep = ALGORITHMS[ref_algo](d, k).keep
    except Exception as exc:  # noqa: BLE001 - re-raised with the dataset name
        raise ReferenceFailure(d.name, ref_algo, exc) from exc
    meta = dataset_meta(d, k_list, graph_method)
    meta.labels = keep.astype(np.int64)
    return meta, meta.records.copy()


def labeled_meta_sets(
    datasets: Sequence[Dataset],
    ref_algo: str = "enn",
    k: int = 3,
    k_list: Sequence[int] = DEFAULT_K_LIST,
    graph_method: str = "indexed",
    n_jobs: int = 1,
) -> list[tuple[MetaDataset, np.ndarray]]:
    """Per-dataset ``(z-scored labeled meta-set, raw records)`` pairs."""
    if len(datasets) < 1:
        raise ValueError("need at least one dataset")
    if ref_algo not in ALGORITHMS:
        raise ValueError(f"unknown reference algorithm {ref_algo!r}")
    jobs = [delayed(_labeled_meta)(d, ref_algo, k, tuple(k_list), graph_method) for d in datasets]
    if n_jobs == 1:
        parts = [f(*a, **kw) for f, a, kw in jobs]
    else:
        parts = Parallel(n_jobs=n_jobs)(jobs)
    for meta, raw in parts:
        meta.records = zscore(raw)
    return parts


def merge_meta_sets(parts: Sequence[tuple[MetaDataset, np.ndarray]]) -> tuple[MetaDataset, ScalingParams]:
    """Concatenated meta-set plus the scaling statistics of the unscaled merged records."""
    merged = MetaDataset.concat([m for m, _ in parts])
    return merged, ScalingParams.fit(np.vstack([raw for _, raw in parts]))


def build_meta_training_set(
    datasets: Sequence[Dataset],
    ref_algo: str = "enn",
    k: int = 3,
    k_list: Sequence[int] = DEFAULT_K_LIST,
    graph_method: str = "indexed",
    n_jobs: int = 1,
) -> MetaDataset:
    """Merged labeled meta-set; every dataset's columns are z-scored independently."""
    return merge_meta_sets(labeled_meta_sets(datasets, ref_algo, k, k_list, graph_method, n_jobs))[0]


@dataclass(eq=False)
class SelectionResult:
    """Keep-probabilities of one dataset plus the masks for a theta grid."""

    probabilities: np.ndarray
    theta_grid: tuple[float, ...] = DEFAULT_THETAS
    masks: dict[float, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self.probabilities = np.asarray(self.probabilities, dtype=np.float64)
        self.theta_grid = tuple(float(t) for t in self.theta_grid)
        for t in self.theta_grid:
            self.masks.setdefault(t, self.probabilities >= t)

    def mask(self, theta: float) -> np.ndarray:
        return self.masks.get(float(theta), self.probabilities >= theta)


class MetaInstanceSelector(BaseEstimator):
    """Instance selector that imitates a reference algorithm through a forest over graph meta-features.

    Parameters
    ----------
    reference : str, default="enn"
        Reference algorithm providing the keep labels (enn, drop3, icf, hmnei, ccis).
    k : int, default=3
        Neighborhood size passed to the reference algorithm.
    k_list : sequence of int, default=(3, 5, 9, 15, 23, 33)
    classifier : {"balanced_rf", "rf"}, default="balanced_rf"
    n_trees, max_depth, min_leaf, features_per_split : forest parameters
    threshold : float, default=0.5
        Keep an instance when its keep-probability is at least this value.
    query_scaling : {"own", "pooled"}, default="own"
        Standardize query meta-features with their own statistics, or with the
        statistics of the merged (unscaled) training meta-set.
    graph_method : {"indexed", "brute"}, default="indexed"
    random_state : int, default=0
    n_jobs : int, default=1
    oob_score : bool, default=False
        Keep out-of-bag predictions of the forest (training diagnostics only).
    """

    def __init__(
        self,
        reference: str = "enn",
        k: int = 3,
        k_list=DEFAULT_K_LIST,
        classifier: str = "balanced_rf",
        n_trees: int = 100,
        max_depth: int = 10,
        min_leaf: int = 1,
        features_per_split: int = 7,
        threshold: float = 0.5,
        query_scaling: str = "own",
        graph_method: str = "indexed",
        random_state: int = 0,
        n_jobs: int = 1,
        oob_score: bool = False,
    ):
        self.reference = reference
        self.k = k
        self.k_list = k_list
        self.classifier = classifier
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.features_per_split = features_per_split
        self.threshold = threshold
        self.query_scaling = query_scaling
        self.graph_method = graph_method
        self.random_state = random_state
        self.n_jobs = n_jobs
        self.oob_score = oob_score

    def _check_params(self):
        if self.classifier not in CLASSIFIERS:
            raise ValueError(f"classifier must be one of {sorted(CLASSIFIERS)}, got {self.classifier!r}")
        if self.query_scaling not in ("own", "pooled"):
            raise ValueError(f"query_scaling must be 'own' or 'pooled', got {self.query_scaling!r}")
        if self.reference not in ALGORITHMS:
            raise ValueError(f"unknown reference algorithm {self.reference!r}")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError(f"threshold must lie in (0, 1), got {self.threshold}")

    def _forest(self):
        return CLASSIFIERS[self.classifier](
            n_trees=self.n_trees,
            max_depth=self.max_depth,
            min_leaf=self.min_leaf,
            features_per_split=self.features_per_split,
            random_state=self.random_state,
            n_jobs=self.n_jobs,
            oob_score=self.oob_score,
        )

    # training

    def fit(self, X, y, groups=None):
        """Fit on one or several datasets stacked in ``X``; ``groups`` names the source of each row."""
        X, y = check_X_y(X, y, dtype=np.float64)
        groups = np.zeros(len(y), dtype=np.int64) if groups is None else np.asarray(groups)
        if groups.shape != (len(y),):
            raise ValueError("groups must have one entry per row")
        names: dict = {}
        for g in groups.tolist():
            names.setdefault(g, None)
        datasets = [Dataset.from_arrays(X[groups == g], y[groups == g], name=str(g)) for g in names]
        return self.fit_datasets(datasets)

    def fit_datasets(self, datasets: Sequence[Dataset]):
        self._check_params()
        parts = labeled_meta_sets(datasets, self.reference, self.k, self.k_list, self.graph_method, self.n_jobs)
        meta, pooled = merge_meta_sets(parts)
        return self.fit_meta(meta, pooled)

    def fit_meta(self, meta: MetaDataset, pooled_scaling: ScalingParams | None = None):
        """Train the forest on an already built, labeled (and scaled) meta-set.

        ``pooled_scaling`` holds the statistics used by ``query_scaling="pooled"``;
        without it the pooled mode applies no scaling.
        """
        self._check_params()
        if meta.labels is None:
            raise ValueError("meta-set has no labels")
        if np.unique(meta.labels).size < 2:
            raise ValueError("meta labels hold a single class; the reference kept or removed everything")
        if list(meta.feature_names) != feature_names(self.k_list):
            raise ValueError("meta-set columns do not match k_list")
        m = len(meta.feature_names)
        self.model_ = self._forest().fit(meta.records, meta.labels, feature_names=meta.feature_names)
        self.trained_on_ = meta.source_names
        self.feature_names_ = list(meta.feature_names)
        self.imbalance_rate_ = float(meta.labels.mean())
        self.n_meta_rows_ = len(meta)
        self.pooled_scaling_ = pooled_scaling or ScalingParams(np.zeros(m), np.ones(m))
        return self

    # application

    def query_meta(self, d: Dataset) -> np.ndarray:
        """Scaled meta-features of a query dataset, in model column order."""
        check_is_fitted(self, "model_")
        if d.n_samples < 2:
            raise ValueError("need at least two instances")
        meta = dataset_meta(d, self.k_list, self.graph_method)
        if list(meta.feature_names) != self.feature_names_:
            raise ValueError("query meta-features do not match the model's feature order")
        if self.query_scaling == "pooled":
            return self.pooled_scaling_.apply(meta.records)
        return zscore(meta.records)

    def keep_probability(self, d: Dataset) -> np.ndarray:
        return self.model_.proba_of(self.query_meta(d), 1)

    def score(self, d: Dataset, thetas: Sequence[float] = DEFAULT_THETAS) -> SelectionResult:
        return SelectionResult(self.keep_probability(d), tuple(thetas))

    def predict_proba(self, X, y) -> np.ndarray:
        """Keep-probability of every row of the labeled set ``(X, y)``."""
        X, y = check_X_y(X, y, dtype=np.float64)
        return self.keep_probability(Dataset.from_arrays(X, y, name="query"))

    def predict(self, X, y) -> np.ndarray:
        """Keep mask at ``threshold``."""
        return self.predict_proba(X, y) >= self.threshold

    def fit_resample(self, X, y):
        """Apply the (already trained) selector to ``(X, y)`` and return the kept rows.

        Named after the resampler protocol; the selector itself is trained on
        other datasets and is not refitted here.
        """
        keep = self.predict(X, y)
        self.sample_indices_ = np.flatnonzero(keep)
        return np.asarray(X)[keep], np.asarray(y)[keep]

    # persistence

    def metadata(self) -> dict:
        from . import __version__

        check_is_fitted(self, "model_")
        params = self.get_params()
        params["k_list"] = [int(k) for k in params["k_list"]]
        params.pop("n_jobs")
        return {
            "format": BUNDLE_FORMAT,
            "version": BUNDLE_VERSION,
            "library_version": __version__,
            "params": params,
            "reference_algorithm": self.reference,
            "k": self.k,
            "k_list": params["k_list"],
            "seed": self.random_state,
            "trained_on": list(self.trained_on_),
            "feature_names": self.feature_names_,
            "imbalance_rate": self.imbalance_rate_,
            "n_meta_rows": self.n_meta_rows_,
            "pooled_means": self.pooled_scaling_.means.tolist(),
            "pooled_stds": self.pooled_scaling_.stds.tolist(),
        }

    def save(self, directory) -> Path:
        out = Path(directory)
        out.mkdir(parents=True, exist_ok=True)
        (out / "model.json").write_text(self.model_.to_json(), encoding="utf-8")
        (out / "metadata.json").write_text(json.dumps(self.metadata(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return out

    @classmethod
    def load(cls, directory) -> "MetaInstanceSelector":
        d = Path(directory)
        meta = json.loads((d / "metadata.json").read_text(encoding="utf-8"))
        if meta.get("format") != BUNDLE_FORMAT or meta.get("version") != BUNDLE_VERSION:
            raise ValueError(f"{d}: not a selector bundle of a supported version")
        params = dict(meta["params"])
        params["k_list"] = tuple(params["k_list"])
        sel = cls(**params)
        sel.model_ = from_json((d / "model.json").read_text(encoding="utf-8"))
        sel.trained_on_ = list(meta["trained_on"])
        sel.feature_names_ = list(meta["feature_names"])
        if sel.feature_names_ != feature_names(sel.k_list) or sel.model_.n_features_in_ != len(sel.feature_names_):
            raise ValueError(f"{d}: model feature order does not match k_list")
        sel.imbalance_rate_ = meta["imbalance_rate"]
        sel.n_meta_rows_ = meta["n_meta_rows"]
        sel.pooled_scaling_ = ScalingParams(np.asarray(meta["pooled_means"]), np.asarray(meta["pooled_stds"]))
        return sel

    def equals(self, other: "MetaInstanceSelector") -> bool:
        return self.model_.equals(other.model_) and self.metadata() == other.metadata()


def train_meta_selector(
    meta: MetaDataset,
    classifier: str = "balanced_rf",
    params: dict | None = None,
    seed: int = 0,
    reference: str = "enn",
    k: int = 3,
) -> MetaInstanceSelector:
    k_list = tuple(sorted({int(n.partition("@k=")[2]) for n in meta.feature_names}))
    sel = MetaInstanceSelector(reference=reference, k=k, k_list=k_list, classifier=classifier, random_state=seed, **(params or {}))
    return sel.fit_meta(meta)


def score_instances(sel: MetaInstanceSelector, d: Dataset, thetas: Sequence[float] = DEFAULT_THETAS) -> SelectionResult:
    return sel.score(d, thetas)


def apply_threshold(res: SelectionResult, theta: float) -> SelectionMask:
    if not 0.0 < theta < 1.0:
        warnings.warn(f"theta={theta} outside (0, 1)", stacklevel=2)
    return SelectionMask(res.mask(theta), "meta")

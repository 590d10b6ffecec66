"""Random Forest and Balanced Random Forest classifiers.

Tree ``i`` draws all of its randomness (bootstrap and per-node feature subsets)
from ``np.random.default_rng(SeedSequence(random_state).spawn(n_trees)[i])``,
so a model depends only on data, parameters and seed, never on ``n_jobs``.

Model JSON layout::

    {"format": "metais-forest", "version": 1,
     "params": {...constructor parameters...},
     "classes": [...], "n_features": m, "feature_names": [...],
     "degenerate": bool,
     "trees": [node, ...]}

    node = {"counts": [...], "n": float, "impurity": float}              # leaf
         | {... , "feature": int, "threshold": float, "left": node, "right": node}

Rows go left when ``x[feature] <= threshold``.
"""

from __future__ import annotations

import json
import warnings

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .tree import Tree, build_tree

FORMAT = "metais-forest"
VERSION = 1


class DegenerateModelWarning(UserWarning):
    """Training labels hold a single class; the model predicts it with probability 1."""


def tree_seeds(random_state: int, n_trees: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(int(random_state)).spawn(n_trees)


def _fit_one(X, y, n_classes, seed, sampler, max_depth, min_leaf, features_per_split):
    rng = np.random.default_rng(seed)
    sample = sampler(y, rng)
    tree = build_tree(X, y, sample, n_classes, rng, max_depth, min_leaf, features_per_split)
    oob = np.ones(len(y), dtype=bool)
    oob[sample] = False
    return tree, oob


class RandomForest(ClassifierMixin, BaseEstimator):
    """Bagged Gini trees with per-split feature subsampling.

    Parameters
    ----------
    n_trees : int, default=100
    max_depth : int, default=10
    min_leaf : int, default=1
        Minimum number of (bootstrap) rows in each child of a split.
    features_per_split : int, default=7
        Size of the random feature subset examined at every node.
    random_state : int, default=0
    n_jobs : int, default=1
    oob_score : bool, default=False
        Also compute out-of-bag predictions (``oob_decision_function_``).
    """

    balanced = False

    def __init__(
        self,
        n_trees: int = 100,
        max_depth: int = 10,
        min_leaf: int = 1,
        features_per_split: int = 7,
        random_state: int = 0,
        n_jobs: int = 1,
        oob_score: bool = False,
    ):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.features_per_split = features_per_split
        self.random_state = random_state
        self.n_jobs = n_jobs
        self.oob_score = oob_score

    def draw_sample(self, y: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Row indices of one tree's training sample: a bootstrap of size n."""
        return rng.integers(0, len(y), size=len(y))

    def _validate_params(self):
        for name in ("n_trees", "max_depth", "min_leaf", "features_per_split"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")

    def fit(self, X, y, feature_names=None):
        self._validate_params()
        X, y = check_X_y(X, y, dtype=np.float64)
        if len(y) < 1:
            raise ValueError("empty training set")
        self.classes_, y_enc = np.unique(y, return_inverse=True)
        self.n_features_in_ = X.shape[1]
        if feature_names is not None and len(feature_names) != X.shape[1]:
            raise ValueError(f"{len(feature_names)} feature names for {X.shape[1]} columns")
        self.feature_names_ = [str(f) for f in feature_names] if feature_names is not None else None
        self.degenerate_ = len(self.classes_) < 2
        if self.degenerate_:
            warnings.warn(f"single class {self.classes_[0]!r} in training labels; constant model", DegenerateModelWarning, stacklevel=2)
        n_classes = len(self.classes_)
        jobs = [
            delayed(_fit_one)(
                X, y_enc, n_classes, s, self.draw_sample, self.max_depth, self.min_leaf, self.features_per_split
            )
            for s in tree_seeds(self.random_state, self.n_trees)
        ]
        out = Parallel(n_jobs=self.n_jobs)(jobs) if self.n_jobs != 1 else [j[0](*j[1], **j[2]) for j in jobs]
        self.trees_ = [t for t, _ in out]
        if self.oob_score:
            acc = np.zeros((len(y), n_classes))
            hits = np.zeros(len(y))
            for t, oob in out:
                if oob.any():
                    acc[oob] += t.predict_proba(X[oob])
                    hits[oob] += 1
            with np.errstate(invalid="ignore"):
                self.oob_decision_function_ = acc / hits[:, None]
            self.oob_available_ = bool((hits > 0).any())
        else:
            self.oob_available_ = False
        return self

    def _check_X(self, X):
        check_is_fitted(self, "trees_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} columns, model expects {self.n_features_in_}")
        return X

    def predict_proba(self, X) -> np.ndarray:
        """Mean over trees of the leaf class frequencies, columns ordered as ``classes_``.

        Every tree is walked for ``max_depth`` steps, so prediction time depends on
        the forest size and depth limit only, not on the shapes of the fitted trees.
        """
        X = self._check_X(X)
        flat = np.ascontiguousarray(X).ravel()
        p = np.zeros((len(X), len(self.classes_)))
        for t in self.trees_:
            p += t.predict_proba(X, self.max_depth, flat)
        return p / len(self.trees_)

    def predict(self, X) -> np.ndarray:
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]

    def proba_of(self, X, label=1) -> np.ndarray:
        """Probability of class ``label`` (zero when it never occurred in training)."""
        p = self.predict_proba(X)
        hit = np.flatnonzero(self.classes_ == label)
        return p[:, hit[0]] if hit.size else np.zeros(len(p))

    @property
    def feature_importances_(self) -> np.ndarray:
        from .importance import mdi_vector

        return mdi_vector(self)

    # serialization

    def to_dict(self) -> dict:
        check_is_fitted(self, "trees_")
        params = self.get_params()
        params.pop("n_jobs")
        return {
            "format": FORMAT,
            "version": VERSION,
            "kind": "balanced_rf" if self.balanced else "rf",
            "params": params,
            "classes": self.classes_.tolist(),
            "n_features": int(self.n_features_in_),
            "feature_names": self.feature_names_,
            "degenerate": bool(self.degenerate_),
            "trees": [t.to_dict() for t in self.trees_],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())

    def equals(self, other: "RandomForest") -> bool:
        return self.to_json() == other.to_json()


class BalancedRandomForest(RandomForest):
    """Random Forest whose per-tree sample holds ``n_min`` draws with replacement from every class.

    ``n_min`` is the size of the smallest class, so each tree sees a class-balanced
    sample of ``c * n_min`` rows.
    """

    balanced = True

    def draw_sample(self, y: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        classes = np.unique(y)
        pools = [np.flatnonzero(y == c) for c in classes]
        n_min = min(p.size for p in pools)
        return np.concatenate([p[rng.integers(0, p.size, size=n_min)] for p in pools])


def from_dict(obj: dict) -> RandomForest:
    if obj.get("format") != FORMAT:
        raise ValueError(f"not a {FORMAT} document")
    if obj.get("version") != VERSION:
        raise ValueError(f"unsupported model version {obj.get('version')!r}")
    cls = BalancedRandomForest if obj["kind"] == "balanced_rf" else RandomForest
    model = cls(**obj["params"])
    model.classes_ = np.asarray(obj["classes"])
    model.n_features_in_ = int(obj["n_features"])
    model.feature_names_ = obj["feature_names"]
    model.degenerate_ = bool(obj["degenerate"])
    model.oob_available_ = False
    model.trees_ = [Tree.from_dict(t) for t in obj["trees"]]
    return model


def from_json(text: str) -> RandomForest:
    return from_dict(json.loads(text))


def load(path) -> RandomForest:
    with open(path, encoding="utf-8") as fh:
        return from_json(fh.read())


def _params(params: dict | None) -> dict:
    params = dict(params or {})
    allowed = {"n_trees", "max_depth", "min_leaf", "features_per_split", "n_jobs", "oob_score"}
    bad = set(params) - allowed
    if bad:
        raise ValueError(f"unknown forest parameters: {sorted(bad)}")
    return params


def train_random_forest(X, y, params: dict | None = None, seed: int = 0, feature_names=None) -> RandomForest:
    return RandomForest(random_state=seed, **_params(params)).fit(X, y, feature_names=feature_names)


def train_balanced_random_forest(X, y, params: dict | None = None, seed: int = 0, feature_names=None) -> BalancedRandomForest:
    return BalancedRandomForest(random_state=seed, **_params(params)).fit(X, y, feature_names=feature_names)


def predict_proba(model: RandomForest, X) -> np.ndarray:
    """Probability of class 1 ("keep") per row."""
    return model.proba_of(X, 1)

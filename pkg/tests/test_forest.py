import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import synthetic_meta
from metais.forest import (
    BalancedRandomForest,
    DegenerateModelWarning,
    RandomForest,
    Tree,
    auc_score,
    balanced_accuracy,
    evaluate_classifier,
    from_dict,
    from_json,
    load,
    mdi_importance,
    predict_proba,
    train_balanced_random_forest,
    train_random_forest,
    write_importance_csvs,
)
from metais.forest.tree import gini, split_threshold
from metais.metafeatures import feature_names


def _leaf(counts):
    return {"counts": counts, "impurity": gini(np.asarray(counts, float)), "n": float(sum(counts))}


def _split(f, t, left, right):
    counts = [a + b for a, b in zip(left["counts"], right["counts"])]
    return {**_leaf(counts), "feature": f, "threshold": t, "left": left, "right": right}


def _model(trees, n_features=2):
    return from_dict({
        "format": "metais-forest", "version": 1, "kind": "rf",
        "params": {"n_trees": len(trees), "max_depth": 10, "min_leaf": 1, "features_per_split": 2,
                   "random_state": 0, "oob_score": False},
        "classes": [0, 1], "n_features": n_features, "feature_names": None,
        "degenerate": False, "trees": trees,
    })


class _Recording(BalancedRandomForest):
    samples = []

    def draw_sample(self, y, rng):
        s = super().draw_sample(y, rng)
        _Recording.samples.append(y[s])
        return s


def test_gini_and_threshold():
    assert gini(np.array([5.0, 5.0])) == 0.5
    assert gini(np.array([4.0, 0.0])) == 0.0
    assert split_threshold(1.0, 2.0) == 1.5
    a = 1.0
    b = np.nextafter(a, 2.0)
    assert split_threshold(a, b) == a


def test_separable_training_accuracy():
    rng = np.random.default_rng(0)
    X = rng.uniform(-1, 1, size=(200, 2))
    y = (X[:, 0] + X[:, 1] > 0).astype(int)
    m = train_random_forest(X, y, {"n_trees": 30}, seed=1)
    assert np.mean(m.predict(X) == y) >= 0.99


def test_same_seed_identical_json():
    X, y = synthetic_meta(300, 0.2, m=8, seed=1)
    a = train_balanced_random_forest(X, y, {"n_trees": 10, "features_per_split": 3}, seed=5)
    b = train_balanced_random_forest(X, y, {"n_trees": 10, "features_per_split": 3}, seed=5)
    c = train_balanced_random_forest(X, y, {"n_trees": 10, "features_per_split": 3}, seed=6)
    assert a.to_json() == b.to_json()
    assert a.to_json() != c.to_json()


def test_thread_count_does_not_matter():
    X, y = synthetic_meta(300, 0.2, m=8, seed=2)
    a = RandomForest(n_trees=8, features_per_split=3, random_state=3, n_jobs=1).fit(X, y)
    b = RandomForest(n_trees=8, features_per_split=3, random_state=3, n_jobs=2).fit(X, y)
    assert a.equals(b)


def test_single_class_degenerate():
    X = np.random.default_rng(0).normal(size=(20, 3))
    with pytest.warns(DegenerateModelWarning):
        m = train_random_forest(X, np.ones(20, int), {"n_trees": 3}, seed=0)
    assert m.degenerate_
    assert np.all(predict_proba(m, X) == 1.0)
    assert np.all(m.predict_proba(X) == 1.0)


def test_balanced_sample_composition():
    y = np.r_[np.zeros(90, int), np.ones(10, int)]
    X = np.random.default_rng(0).normal(size=(100, 4))
    _Recording.samples = []
    _Recording(n_trees=12, features_per_split=2, random_state=0).fit(X, y)
    assert len(_Recording.samples) == 12
    for s in _Recording.samples:
        assert len(s) == 20
        assert np.bincount(s).tolist() == [10, 10]


def test_balanced_input_sample_size():
    y = np.r_[np.zeros(30, int), np.ones(30, int)]
    _Recording.samples = []
    _Recording(n_trees=3, random_state=0).fit(np.random.default_rng(0).normal(size=(60, 2)), y)
    assert all(len(s) == 60 for s in _Recording.samples)


def test_brf_beats_rf_on_imbalanced():
    X, y = synthetic_meta(3000, 0.1, seed=4)
    Xt, yt = synthetic_meta(3000, 0.1, seed=5)
    p = {"n_trees": 40}
    rf = evaluate_classifier(train_random_forest(X, y, p, seed=0), Xt, yt)
    brf = evaluate_classifier(train_balanced_random_forest(X, y, p, seed=0), Xt, yt)
    assert brf["balanced_accuracy"] > rf["balanced_accuracy"]
    assert rf["accuracy"] >= brf["accuracy"]


def test_pure_leaf_and_vote_average():
    one = _model([_leaf([0, 3])])
    assert predict_proba(one, np.zeros((2, 2))).tolist() == [1.0, 1.0]
    two = _model([_leaf([0, 3]), _leaf([5, 0])])
    assert predict_proba(two, np.zeros((1, 2))).tolist() == [0.5]


def test_hand_traced_two_tree_model():
    t1 = _split(0, 0.5, _leaf([3, 1]), _split(1, 2.0, _leaf([0, 2]), _leaf([1, 1])))
    t2 = _split(1, 0.0, _leaf([2, 2]), _leaf([0, 4]))
    m = _model([t1, t2])
    X = np.array([[0.0, 0.0], [1.0, 3.0], [1.0, 1.0], [0.5, 2.0]])
    # row 3: tree 1 goes left (0.5 <= 0.5) -> 0.25; tree 2 goes right -> 1.0
    assert predict_proba(m, X).tolist() == [0.375, 0.75, 1.0, 0.625]
    assert m.trees_[0].apply(X).tolist() == [1, 4, 3, 1]


def test_json_round_trip(tmp_path):
    X, y = synthetic_meta(200, 0.3, m=6, seed=3)
    m = train_balanced_random_forest(X, y, {"n_trees": 5, "features_per_split": 2}, seed=1)
    p = tmp_path / "m.json"
    m.save(p)
    back = load(p)
    assert back.equals(m)
    assert np.array_equal(back.predict_proba(X), m.predict_proba(X))
    assert isinstance(back, BalancedRandomForest)
    doc = json.loads(p.read_text())
    assert doc["version"] == 1 and doc["params"]["n_trees"] == 5
    root = doc["trees"][0]
    assert {"feature", "threshold", "counts", "left", "right"} <= set(root)
    with pytest.raises(ValueError):
        from_json(json.dumps({**doc, "version": 99}))


def test_column_mismatch():
    m = train_random_forest(np.random.default_rng(0).normal(size=(30, 3)), np.arange(30) % 2, {"n_trees": 2})
    with pytest.raises(ValueError):
        m.predict_proba(np.zeros((2, 4)))


def test_params_validation():
    with pytest.raises(ValueError):
        train_random_forest(np.zeros((4, 2)), [0, 1, 0, 1], {"n_estimators": 3})
    with pytest.raises(ValueError):
        RandomForest(n_trees=0).fit(np.zeros((4, 2)), [0, 1, 0, 1])


def test_get_params_sklearn():
    m = BalancedRandomForest(n_trees=7)
    assert m.get_params()["n_trees"] == 7
    assert m.set_params(max_depth=3).max_depth == 3


def test_oob_predictions():
    X, y = synthetic_meta(200, 0.3, m=6, seed=8)
    m = RandomForest(n_trees=20, features_per_split=3, oob_score=True).fit(X, y)
    assert m.oob_available_
    ok = ~np.isnan(m.oob_decision_function_[:, 0])
    assert np.allclose(m.oob_decision_function_[ok].sum(axis=1), 1.0)


@settings(max_examples=20, deadline=None)
@given(st.integers(10, 80), st.integers(1, 6), st.integers(0, 10**6), st.integers(1, 6))
def test_tree_invariants(n, m, seed, depth):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 4, size=(n, m)).astype(float)
    y = rng.integers(0, 2, size=n)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateModelWarning)
        model = RandomForest(n_trees=3, max_depth=depth, features_per_split=2, random_state=seed).fit(X, y)
    P = model.predict_proba(X)
    assert np.all((P >= 0) & (P <= 1))
    assert np.allclose(P.sum(axis=1), 1.0, atol=1e-9)
    for t in model.trees_:
        assert t.depth <= depth
        split = t.feature >= 0
        assert np.all(t.feature[split] < m)
        assert np.all(t.counts >= 0) and np.all(t.counts.sum(axis=1) > 0)
        assert np.array_equal(t.apply(X), t.apply(X, steps=depth + 3))
        assert Tree.from_dict(t.to_dict()).equals(t)


# MDI


def test_stump_importance():
    X = np.random.default_rng(0).normal(size=(100, 3))
    y = (X[:, 1] > 0).astype(int)
    m = RandomForest(n_trees=1, max_depth=1, features_per_split=3).fit(X, y)
    assert m.feature_importances_.tolist() == [0.0, 1.0, 0.0]


def test_importance_groupings(tmp_path):
    names = feature_names()
    rng = np.random.default_rng(1)
    X = rng.normal(size=(1500, 48))
    signal = names.index("avg_dist_opposite@k=3")
    y = (X[:, signal] + 0.3 * rng.normal(size=1500) > 0).astype(int)
    m = RandomForest(n_trees=30, max_depth=6).fit(X, y, feature_names=names)
    rep = mdi_importance(m)
    assert np.all(rep.per_feature_mdi >= 0)
    assert abs(sum(rep.grouped_by_type.values()) - rep.total) < 1e-9
    assert abs(sum(rep.grouped_by_k.values()) - rep.total) < 1e-9
    assert len(rep.grouped_by_type) == 8 and len(rep.grouped_by_k) == 6
    assert rep.grouped_by_type["avg_dist_opposite"] > 0.5 * rep.total
    assert rep.grouped_by_k[3] > 0.5 * rep.total
    paths = write_importance_csvs(rep, tmp_path / "imp")
    assert [p.rsplit("_", 1)[-1] for p in paths] == ["features.csv", "type.csv", "k.csv"]


# metrics


def test_auc_examples():
    assert auc_score([0, 0, 1, 1], [0.1, 0.2, 0.8, 0.9]) == 1.0
    assert auc_score([0, 1, 0, 1], [0.5] * 4) == 0.5
    # one inverted pair out of nine
    assert auc_score([0, 0, 0, 1, 1, 1], [0.1, 0.2, 0.6, 0.5, 0.8, 0.9]) == pytest.approx(8 / 9, abs=1e-15)
    assert auc_score([1, 1], [0.2, 0.3]) is None


def test_balanced_accuracy():
    assert balanced_accuracy([0, 0, 0, 1], [0, 0, 1, 1]) == pytest.approx((2 / 3 + 1) / 2)

import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from metais.dataset import (
    Dataset,
    DatasetError,
    KeelParseError,
    ScalingParams,
    destandardize,
    load_bundled,
    load_csv,
    load_keel,
    standardize,
    stratified_kfold,
)

KEEL_3ROWS = """@relation toy
@attribute a real [0.0, 10.0]
@attribute b real [-5.0, 5.0]
@attribute Class {pos, neg}
@inputs a, b
@outputs Class
@data
1.5, -2.0, pos
3.0, 0.25, neg
7.0, 4.0, pos
"""


def _plain_reader(text):
    """Independent reader: skip header lines, split the rest on commas."""
    body = text.split("@data", 1)[1].strip().splitlines()
    rows = [[c.strip() for c in line.split(",")] for line in body]
    return [[float(c) for c in r[:-1]] for r in rows], [r[-1] for r in rows]


def test_keel_three_rows(tmp_path):
    p = tmp_path / "toy.dat"
    p.write_text(KEEL_3ROWS)
    d = load_keel(p)
    X_ref, tokens = _plain_reader(KEEL_3ROWS)
    assert (d.n_samples, d.n_features, d.n_classes) == (3, 2, 2)
    assert np.array_equal(d.features, np.array(X_ref))
    assert [d.class_names[i] for i in d.labels] == tokens
    assert d.feature_names == ("a", "b")
    assert d.name == "toy"


def test_keel_empty_data(tmp_path):
    p = tmp_path / "empty.dat"
    p.write_text(KEEL_3ROWS.split("@data")[0] + "@data\n")
    with pytest.raises(KeelParseError, match="empty data section"):
        load_keel(p)


@pytest.mark.parametrize(
    "bad, line",
    [
        ("1.5, x, pos", 8),
        ("1.5, 2.0, maybe", 8),
        ("1.5, pos", 8),
    ],
)
def test_keel_row_errors_carry_line_number(tmp_path, bad, line):
    p = tmp_path / "bad.dat"
    p.write_text(KEEL_3ROWS.replace("1.5, -2.0, pos", bad))
    with pytest.raises(KeelParseError) as err:
        load_keel(p)
    assert err.value.line == line


def test_keel_rejects_categorical_input(tmp_path):
    p = tmp_path / "cat.dat"
    p.write_text(KEEL_3ROWS.replace("@attribute b real [-5.0, 5.0]", "@attribute b {u, v}"))
    with pytest.raises(KeelParseError, match="categorical"):
        load_keel(p)


def test_keel_malformed_header(tmp_path):
    p = tmp_path / "hdr.dat"
    p.write_text(KEEL_3ROWS.replace("@attribute a real [0.0, 10.0]", "@attribute a text"))
    with pytest.raises(KeelParseError) as err:
        load_keel(p)
    assert err.value.line == 2


def test_banana_size():
    d = load_bundled("banana")
    assert (d.n_samples, d.n_features, d.n_classes) == (5300, 2, 2)


def test_csv_first_appearance(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("f1,f2,y\n1,2,a\n3,4,a\n5,6,b\n7,8,a\n")
    d = load_csv(p, "y")
    assert d.labels.tolist() == [0, 0, 1, 0]
    assert d.n_classes == 2
    assert d.class_names == ("a", "b")


def test_csv_ragged_row(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("f1,f2,y\n1,2,a\n3,4,a\n5,b\n")
    with pytest.raises(DatasetError, match="row 3"):
        load_csv(p, "y")


def test_csv_errors(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("f1,f2,y\n1,2,a\n")
    with pytest.raises(DatasetError, match="not found"):
        load_csv(p, "label")
    p.write_text("f1,f2,y\n1,zz,a\n")
    with pytest.raises(DatasetError, match="non-numeric"):
        load_csv(p, "y")


def test_csv_equals_keel(tmp_path):
    k = tmp_path / "toy.dat"
    k.write_text(KEEL_3ROWS)
    X, tokens = _plain_reader(KEEL_3ROWS)
    c = tmp_path / "toy.csv"
    with open(c, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["a", "b", "Class"])
        for row, t in zip(X, tokens):
            w.writerow([*row, t])
    assert load_csv(c, "Class").equals(load_keel(k))


def test_standardize_hand_values():
    d = Dataset.from_arrays([[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]], [0, 1, 0])
    z, params = standardize(d)
    assert np.allclose(z.features[:, 0], [-1.224744871391589, 0.0, 1.224744871391589], atol=1e-12)
    assert params.means[0] == 2.0
    assert params.stds[0] == pytest.approx(np.sqrt(2 / 3), abs=1e-12)
    assert np.array_equal(z.features[:, 1], [0.0, 0.0, 0.0])
    assert params.stds[1] == 1.0


def test_scaling_rejects_nonpositive_std():
    with pytest.raises(DatasetError):
        ScalingParams(np.zeros(2), np.array([1.0, 0.0]))


def test_dataset_invariants():
    with pytest.raises(DatasetError):
        Dataset(np.zeros((2, 1)), np.array([0, 2]), ("x",), ("a", "b"))
    with pytest.raises(DatasetError):
        Dataset(np.array([[np.nan], [0.0]]), np.array([0, 1]), ("x",), ("a", "b"))
    with pytest.raises(DatasetError):
        Dataset(np.zeros((0, 1)), np.zeros(0, dtype=int), ("x",), ("a",))


finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 30), st.integers(1, 5)), elements=finite))
def test_standardize_properties(X):
    d = Dataset.from_arrays(X, np.zeros(len(X), dtype=int))
    z, params = standardize(d)
    assert np.all(np.abs(z.features.mean(axis=0)) < 1e-9)
    varying = X.std(axis=0) > 1e-6 * (1 + np.abs(X).max())
    assert np.allclose(z.features.std(axis=0)[varying], 1.0, atol=1e-9)
    assert np.allclose(destandardize(z, params).features, X, atol=1e-9)
    z2, _ = standardize(z)
    assert np.allclose(z2.features[:, varying], z.features[:, varying], atol=1e-9)


def test_kfold_perfect_division():
    y = [0] * 5 + [1] * 5
    for split in stratified_kfold(y, 5, seed=3):
        assert sorted(np.asarray(y)[split.test_indices].tolist()) == [0, 1]


def test_kfold_deterministic():
    y = np.arange(50) % 3
    a = stratified_kfold(y, 5, seed=9)
    b = stratified_kfold(y, 5, seed=9)
    assert all(np.array_equal(s.test_indices, t.test_indices) for s, t in zip(a, b))


def test_kfold_uneven_counts():
    y = np.array([0] * 41 + [1] * 37 + [2] * 25)
    splits = stratified_kfold(y, 5, seed=1)
    for c in range(3):
        counts = [int((y[s.test_indices] == c).sum()) for s in splits]
        assert max(counts) - min(counts) <= 1
        assert sum(counts) == (y == c).sum()


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 3), min_size=5, max_size=60), st.integers(2, 5), st.integers(0, 1000))
def test_kfold_partition(labels, folds, seed):
    y = np.asarray(labels)
    splits = stratified_kfold(y, folds, seed)
    tests = np.concatenate([s.test_indices for s in splits])
    assert sorted(tests.tolist()) == list(range(len(y)))
    for s in splits:
        assert np.intersect1d(s.train_indices, s.test_indices).size == 0
        assert len(s.train_indices) + len(s.test_indices) == len(y)


def test_kfold_errors():
    with pytest.raises(DatasetError):
        stratified_kfold([0, 1, 0], folds=4)
    with pytest.raises(DatasetError):
        stratified_kfold([0, 1, 0], folds=1)

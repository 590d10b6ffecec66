import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import _oracles as O
from conftest import make_blobs
from metais.dataset import Dataset
from metais.evaluation import (
    CurvePoint,
    EmptyTrainingSet,
    auarr,
    auarr_limited,
    eval_1nn,
    leave_one_dataset_out,
    mean_curve,
    speedup,
    sweep_from_probabilities,
    theta_sweep,
    timing,
    write_report,
)
from metais.evaluation.curves import collapse
from metais.selector import DEFAULT_THETAS, MetaInstanceSelector

HAND = [(0.0, 0.9), (0.5, 0.9), (1.0, 0.8)]


def _line(xs, ys, name="line"):
    return Dataset.from_arrays(np.asarray(xs, float)[:, None], ys, name=name)


# 1-NN


def test_1nn_hand_table():
    train = Dataset(np.arange(10.0)[:, None], np.array([0, 0, 0, 1, 1, 0, 1, 1, 1, 0]), ("x",), ("a", "b"))
    test = Dataset(
        np.array([0.4, 1.6, 2.4, 2.6, 4.4, 5.4, 5.6, 7.4, 8.6, 9.4])[:, None],
        np.array([0, 0, 1, 1, 1, 1, 1, 0, 0, 0]),
        ("x",),
        ("a", "b"),
    )
    # nearest train points 0 2 2 3 4 5 6 7 9 9 -> predictions 0 0 0 1 1 0 1 1 0 0
    assert eval_1nn(train, test)["accuracy"] == 0.7


def test_1nn_exact_match_and_tie():
    train = Dataset(np.array([[0.0], [1.0], [1.0]]), np.array([0, 1, 0]), ("x",), ("a", "b"))
    test = Dataset(np.array([[1.0], [0.5]]), np.array([1, 0]), ("x",), ("a", "b"))
    # distance 0 wins; the 0.5 tie between rows 0 and 1 goes to the lower index
    assert eval_1nn(train, test)["accuracy"] == 1.0


def test_1nn_train_equals_test():
    X, y = make_blobs(seed=3, gap=1.0)
    d = Dataset.from_arrays(X, y)
    assert eval_1nn(d, d)["accuracy"] == 1.0


def test_1nn_f1_modes():
    train = _line([0, 1, 2, 3], [0, 1, 0, 1])
    test = Dataset(np.array([[0.1], [1.1], [2.9], [2.1]]), np.array([0, 1, 0, 1]), ("x",), ("0", "1"))
    r = eval_1nn(train, test)
    # predictions 0 1 1 0 -> precision 1/2, recall 1/2 for class 1
    assert r["accuracy"] == 0.5 and r["f1"] == 0.5
    tri = Dataset(np.arange(6.0)[:, None], np.array([0, 1, 2, 0, 1, 2]), ("x",), ("a", "b", "c"))
    assert eval_1nn(tri, tri)["f1"] == 1.0


def test_1nn_empty_selection():
    train = _line([0, 1], [0, 1])
    with pytest.raises(EmptyTrainingSet):
        eval_1nn(train, train, keep=np.zeros(2, bool))


# curves


def test_sweep_structure():
    X, y = make_blobs(seed=5, gap=2.0)
    d = Dataset.from_arrays(X, y)
    p = np.linspace(0.0, 1.0, len(y))
    points, skipped = sweep_from_probabilities(p, d, d, DEFAULT_THETAS)
    assert len(points) <= 10 and skipped == []
    assert points[0].theta is None and points[0].reduction_rate == 0.0
    rr = [pt.reduction_rate for pt in points]
    assert rr == sorted(rr)
    assert [pt.theta for pt in points[1:]] == list(DEFAULT_THETAS)


def test_sweep_all_keep_coincides_with_anchor():
    X, y = make_blobs(seed=5, gap=2.0)
    d = Dataset.from_arrays(X, y)
    points, _ = sweep_from_probabilities(np.ones(len(y)), d, d, DEFAULT_THETAS)
    assert {(pt.reduction_rate, pt.score) for pt in points} == {(0.0, points[0].score)}


def test_sweep_empty_thresholds_skipped():
    d = _line([0, 1, 2, 3], [0, 1, 0, 1])
    points, skipped = sweep_from_probabilities(np.full(4, 0.25), d, d, DEFAULT_THETAS)
    assert skipped == list(DEFAULT_THETAS[2:])
    assert len(points) == 3
    with pytest.raises(ValueError):
        sweep_from_probabilities(np.ones(4), d, d, [0.5, 0.2])


def test_flat_then_drop_on_two_blobs():
    train_sets = [Dataset.from_arrays(*make_blobs(100, 2.5, s), name=f"b{s}") for s in (31, 32, 33)]
    sel = MetaInstanceSelector(reference="drop3", n_trees=30, max_depth=8).fit_datasets(train_sets)
    Xa, ya = make_blobs(100, 4.0, 41)
    Xb, yb = make_blobs(100, 4.0, 42)
    points = theta_sweep(sel, Dataset.from_arrays(Xa, ya), Dataset.from_arrays(Xb, yb), DEFAULT_THETAS)
    anchor = points[0].score
    for pt in points:
        if pt.reduction_rate <= 0.5:
            assert pt.score >= anchor - 0.05
    assert max(pt.reduction_rate for pt in points) > 0.5


def test_collapse_keeps_best():
    pts = [CurvePoint(0.0, 0.9), CurvePoint(0.2, 0.7, 0.5), CurvePoint(0.2, 0.8, 0.4), CurvePoint(0.1, 0.85, 0.3)]
    out = collapse(pts)
    assert [(p.reduction_rate, p.score) for p in out] == [(0.0, 0.9), (0.1, 0.85), (0.2, 0.8)]
    assert auarr(pts) == auarr([(0.0, 0.9), (0.1, 0.85), (0.2, 0.8)])


# AUARR


def test_auarr_hand_values():
    assert auarr(HAND, 1.0) == 0.875
    assert auarr(HAND, 0.0) == 0.0
    assert auarr(HAND, 0.5) == 0.45
    assert auarr(HAND, 0.75) == pytest.approx(0.45 + 0.25 * (0.9 + 0.85) / 2, abs=1e-15)


def test_auarr_errors_and_beyond_last_point():
    with pytest.raises(ValueError):
        auarr([], 1.0)
    with pytest.raises(ValueError):
        auarr([(0.5, 0.9), (0.1, 0.8)])
    assert auarr([(0.0, 0.9), (0.4, 0.7)], 1.0) == pytest.approx(0.32, abs=1e-15)


def test_auarr_limited_examples():
    ref = auarr_limited([(0.0, 0.9), (0.5, 0.8)], (0.5, 0.8), 0.9)
    assert ref["auarr_L_ref"] == pytest.approx(0.425, abs=1e-15)
    assert ref["auarr_L_meta"] == ref["auarr_L_ref"]
    flat = auarr_limited([(0.0, 0.9), (0.5, 0.9), (0.8, 0.7)], (0.5, 0.8), 0.9)
    assert flat["auarr_L_meta"] == pytest.approx(0.45, abs=1e-15)
    assert flat["auarr_L_meta"] > flat["auarr_L_ref"]
    assert flat["auarr_meta"] == pytest.approx(0.45 + 0.3 * 0.8, abs=1e-15)
    assert flat["auarr_ref"] == flat["auarr_L_ref"]
    with pytest.raises(ValueError):
        auarr_limited(HAND, (0.0, 0.9), 0.9)


curves = st.lists(
    st.tuples(st.floats(0.001, 1.0), st.floats(0.0, 1.0)), min_size=1, max_size=10
).map(lambda pts: [(0.0, pts[0][1])] + sorted({x: y for x, y in pts}.items()))


@settings(max_examples=50, deadline=None)
@given(curves, st.floats(0.0, 1.0), st.floats(0.1, 3.0))
def test_auarr_properties(curve, a, s):
    xs = np.array([p[0] for p in curve])
    ys = np.array([p[1] for p in curve])
    assert auarr(curve, a) == pytest.approx(O.riemann_area(xs, ys, a), abs=1e-6)
    scaled = [(x, s * y) for x, y in curve]
    assert auarr(scaled, a) == pytest.approx(s * auarr(curve, a), abs=1e-12)
    b = min(1.0, a + 0.25)
    assert auarr(curve, a) <= auarr(curve, b) + 1e-12
    between = O.riemann_area(xs, ys, b) - O.riemann_area(xs, ys, a)
    assert auarr(curve, a) + between == pytest.approx(auarr(curve, b), abs=1e-6)


# timing


def test_timing_helpers():
    assert timing(sum, range(1000)) > 0
    assert speedup(100.0, 4.0) == 25.0


# protocol


@pytest.fixture(scope="module")
def toy_report():
    ds = [Dataset.from_arrays(*make_blobs(60, 2.0, s), name=f"toy{s}") for s in (51, 52)]
    return leave_one_dataset_out(ds, "enn", params={"n_trees": 10, "max_depth": 6}, folds=5, seed=1)


def test_protocol_arithmetic(toy_report):
    assert [d.name for d in toy_report.datasets] == ["toy51", "toy52"]
    for d in toy_report.datasets:
        assert d.error is None and len(d.folds) == 5
        assert d.name not in d.trained_on and len(d.trained_on) == 1
        for f in d.folds:
            assert f.n_train + f.n_test == 120
            for v in f.areas.values():
                assert 0.0 <= v <= 1.0
        thetas = [t for t, _, _ in mean_curve(d)]
        assert thetas == sorted(thetas)


def test_protocol_outputs(toy_report, tmp_path):
    write_report(toy_report, tmp_path)
    names = {p.name for p in tmp_path.iterdir()}
    assert {"report.json", "curves.csv", "summary.csv", "timing.json", "curves",
            "importance_features.csv", "importance_by_type.csv", "importance_by_k.csv"} <= names
    assert (tmp_path / "curves" / "toy51.csv").exists()
    header = (tmp_path / "summary.csv").read_text().splitlines()[0].split(",")
    assert "verdict" in header and "verdict_L" in header
    first_col = [line.split(",")[0] for line in (tmp_path / "summary.csv").read_text().splitlines()]
    assert "wins" in first_col and "mean_difference" in first_col
    doc = json.loads((tmp_path / "report.json").read_text())
    assert "wall_time_ms" not in json.dumps(doc) and "ref_time_ms" not in json.dumps(doc)
    timing_doc = json.loads((tmp_path / "timing.json").read_text())
    assert set(timing_doc) == {"toy51", "toy52"}


def test_protocol_records_failures():
    ok = [Dataset.from_arrays(*make_blobs(40, 2.0, s), name=f"ok{s}") for s in (61, 62)]
    bad = Dataset.from_arrays(np.arange(6.0)[:, None], [0, 1, 0, 1, 0, 1], name="tiny")
    rep = leave_one_dataset_out(ok + [bad], "drop3", params={"n_trees": 5}, folds=2, seed=0, k=5)
    status = {d.name: d.error for d in rep.datasets}
    assert status["tiny"] is not None and status["ok61"] is None
    with pytest.raises(ValueError):
        leave_one_dataset_out(ok[:1], "enn")

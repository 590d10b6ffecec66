import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metais.nng import GraphWarning, build_graph, distance, knn_query, load_graph, save_graph, truncate


def _sorted_neighbors(X, i, k):
    """Independent oracle: math.fsum distances, sorted on (distance, index)."""
    m = X.shape[1]
    d = [(math.fsum((X[i, t] - X[j, t]) ** 2 for t in range(m)) / m, j) for j in range(len(X)) if j != i]
    return sorted(d)[:k]


def test_distance_hand_values():
    assert distance([0, 0], [3, 4]) == 12.5
    assert distance([1.5, -2, 7], [1.5, -2, 7]) == 0.0
    with pytest.raises(ValueError):
        distance([1, 2], [1, 2, 3])
    with pytest.raises(ValueError):
        distance([1, 2], [1, 2], m=3)


def test_distance_second_path(rng):
    for _ in range(20):
        a, b = rng.normal(size=7), rng.normal(size=7)
        assert abs(distance(a, b, 7) - np.mean((a - b) ** 2)) < 1e-12


def test_collinear_points():
    g = build_graph(np.array([[0.0], [1.0], [3.0]]), 2)
    assert g.neighbors(1) == [(0, 1.0), (2, 4.0)]


def test_duplicates_are_mutual_first_neighbors():
    X = np.array([[0.0, 0.0], [2.0, 2.0], [0.0, 0.0], [5.0, 1.0]])
    g = build_graph(X, 3)
    assert g.neighbors(0)[0] == (2, 0.0)
    assert g.neighbors(2)[0] == (0, 0.0)


@pytest.mark.parametrize("grid", [False, True])
def test_indexed_equals_brute_500(grid):
    rng = np.random.default_rng(5)
    X = rng.integers(0, 5, size=(500, 3)).astype(float) if grid else rng.uniform(size=(500, 4))
    a = build_graph(X, 33, "indexed")
    b = build_graph(X, 33, "brute")
    assert a.equals(b)


def test_graph_matches_scalar_oracle():
    rng = np.random.default_rng(8)
    X = rng.integers(0, 3, size=(40, 2)).astype(float)
    g = build_graph(X, 6)
    for i in range(len(X)):
        expect = _sorted_neighbors(X, i, 6)
        assert g.indices[i].tolist() == [j for _, j in expect]
        assert np.allclose(g.distances[i], [d for d, _ in expect], atol=1e-15)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 60), st.integers(1, 5), st.integers(1, 12), st.integers(0, 10**6), st.booleans())
def test_graph_invariants(n, m, k, seed, grid):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 3, size=(n, m)).astype(float) if grid else rng.normal(size=(n, m))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GraphWarning)
        g = build_graph(X, k)
        b = build_graph(X, k, "brute")
    assert g.equals(b)
    assert g.k_max == min(k, n - 1)
    assert g.indices.shape == (n, min(k, n - 1))
    for i in range(n):
        assert i not in g.indices[i]
        pairs = list(zip(g.distances[i], g.indices[i]))
        assert pairs == sorted(pairs)
    assert np.all(g.distances >= 0)
    D = {(i, int(j)): d for i in range(n) for j, d in zip(g.indices[i], g.distances[i])}
    for (i, j), d in D.items():
        if (j, i) in D:
            assert D[(j, i)] == d


def test_k_clipped_with_warning():
    X = np.arange(8, dtype=float).reshape(4, 2)
    with pytest.warns(GraphWarning):
        g = build_graph(X, 10)
    assert g.k_max == 3


def test_build_errors():
    with pytest.raises(ValueError):
        build_graph(np.zeros((1, 2)), 1)
    with pytest.raises(ValueError):
        build_graph(np.zeros((5, 2)), 0)
    with pytest.raises(ValueError):
        knn_query(np.zeros((5, 2)), k=1, method="lsh")


def test_truncate():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(80, 3))
    g = build_graph(X, 9)
    assert truncate(g, 9).equals(g)
    one = truncate(g, 1)
    assert one.indices.shape == (80, 1)
    assert np.array_equal(one.indices[:, 0], g.indices[:, 0])
    assert truncate(g, 5).equals(build_graph(X, 5))
    with pytest.raises(ValueError):
        truncate(g, 10)


def test_permutation_and_scaling_invariance():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(60, 4))
    g = build_graph(X, 7)
    gp = build_graph(X[:, [2, 0, 3, 1]], 7)
    assert np.array_equal(g.indices, gp.indices)
    assert np.allclose(g.distances, gp.distances, rtol=1e-12)
    gs = build_graph(2.0 * X, 7)
    assert np.array_equal(g.indices, gs.indices)
    assert np.allclose(gs.distances, 4.0 * g.distances, rtol=1e-12)


def test_cache_round_trip(tmp_path):
    rng = np.random.default_rng(6)
    X = rng.normal(size=(50, 2))
    g = build_graph(X, 5, labels=rng.integers(0, 2, 50))
    p = tmp_path / "g.npz"
    save_graph(g, p)
    assert load_graph(p).equals(g)


def test_knn_query_external_points():
    X = np.array([[0.0], [1.0], [3.0]])
    idx, dist = knn_query(X, np.array([[0.5], [3.0]]), k=2)
    assert idx.tolist() == [[0, 1], [2, 1]]
    assert dist.tolist() == [[0.25, 0.25], [0.0, 4.0]]

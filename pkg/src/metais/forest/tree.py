"""Array-backed CART classification tree with Gini splits.

Nodes are stored in preorder (left subtree before right). A node is a leaf when
``feature[i] == -1``. Every node keeps the class counts of the training rows
that reached it, its sample count and its Gini impurity, which is all that
prediction, MDI and serialization need.
"""

from __future__ import annotations

import numpy as np

LEAF = -1
MIN_GAIN = 1e-12


def gini(counts: np.ndarray) -> float:
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return float(1.0 - np.dot(p, p))


def split_threshold(lo: float, hi: float) -> float:
    """Midpoint of two consecutive distinct values, kept strictly below ``hi``."""
    t = lo + (hi - lo) / 2.0
    return lo if t >= hi else t


class Tree:
    """A fitted tree: parallel node arrays plus class bookkeeping."""

    def __init__(self, feature, threshold, left, right, counts, impurity):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.counts = np.asarray(counts, dtype=np.float64).reshape(len(self.feature), -1)
        self.impurity = np.asarray(impurity, dtype=np.float64)

    @property
    def n_nodes(self) -> int:
        return int(self.feature.size)

    @property
    def n_node_samples(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def depth(self) -> int:
        if getattr(self, "_depth", None) is None:
            d = np.zeros(self.n_nodes, dtype=np.int64)
            for i in range(self.n_nodes):
                if self.feature[i] != LEAF:
                    d[self.left[i]] = d[self.right[i]] = d[i] + 1
            self._depth = int(d.max())
        return self._depth

    def _walk_arrays(self):
        # leaves point to themselves and always go "left", so extra steps are no-ops
        if getattr(self, "_walk", None) is None:
            leaf = self.feature == LEAF
            idx = np.arange(self.n_nodes)
            child = np.empty(2 * self.n_nodes, dtype=np.intp)
            child[0::2] = np.where(leaf, idx, self.left)
            child[1::2] = np.where(leaf, idx, self.right)
            self._walk = (np.where(leaf, 0, self.feature).astype(np.intp), np.where(leaf, np.inf, self.threshold), child)
        return self._walk

    def apply(self, X: np.ndarray, steps: int | None = None, _flat=None) -> np.ndarray:
        """Leaf index reached by every row.

        The walk always takes ``steps`` vectorized steps (default: the tree depth),
        so its cost does not depend on where the rows end up. Values are gathered
        from the row-major matrix, so memory traffic per row does not depend on
        which features the tree tests either.
        """
        flat = np.ascontiguousarray(X, dtype=np.float64).ravel() if _flat is None else _flat
        n = len(X)
        feat, thr, child = self._walk_arrays()
        steps = self.depth if steps is None else max(int(steps), self.depth)
        row_off = np.arange(n) * X.shape[1]
        node = np.zeros(n, dtype=np.intp)
        for _ in range(steps):
            go_right = flat[row_off + feat[node]] > thr[node]
            node = child[2 * node + go_right]
        return node

    def predict_proba(self, X: np.ndarray, steps: int | None = None, _flat=None) -> np.ndarray:
        c = self.counts[self.apply(X, steps, _flat)]
        return c / c.sum(axis=1, keepdims=True)

    def impurity_decrease(self) -> np.ndarray:
        """Per-feature total of weighted Gini decrease (weights relative to the root count)."""
        n = self.n_node_samples
        out: dict[int, float] = {}
        for i in np.flatnonzero(self.feature != LEAF):
            l, r = self.left[i], self.right[i]
            dec = n[i] * self.impurity[i] - n[l] * self.impurity[l] - n[r] * self.impurity[r]
            f = int(self.feature[i])
            out[f] = out.get(f, 0.0) + dec / n[0]
        return out

    # serialization

    def to_dict(self, i: int = 0) -> dict:
        rec = {
            "counts": self.counts[i].tolist(),
            "impurity": float(self.impurity[i]),
            "n": float(self.counts[i].sum()),
        }
        if self.feature[i] != LEAF:
            rec["feature"] = int(self.feature[i])
            rec["threshold"] = float(self.threshold[i])
            rec["left"] = self.to_dict(int(self.left[i]))
            rec["right"] = self.to_dict(int(self.right[i]))
        return rec

    @classmethod
    def from_dict(cls, root: dict) -> "Tree":
        feature, threshold, left, right, counts, impurity = [], [], [], [], [], []

        def visit(rec):
            i = len(feature)
            feature.append(rec.get("feature", LEAF))
            threshold.append(rec.get("threshold", 0.0))
            left.append(-1)
            right.append(-1)
            counts.append(rec["counts"])
            impurity.append(rec["impurity"])
            if "feature" in rec:
                left[i] = visit(rec["left"])
                right[i] = visit(rec["right"])
            return i

        visit(root)
        return cls(feature, threshold, left, right, counts, impurity)

    def equals(self, other: "Tree") -> bool:
        return all(
            np.array_equal(getattr(self, a), getattr(other, a))
            for a in ("feature", "threshold", "left", "right", "counts", "impurity")
        )


def _best_split(Xn: np.ndarray, yn: np.ndarray, n_classes: int, features: np.ndarray, min_leaf: int):
    """Best (feature, threshold, gain) among ``features`` for the rows at a node, or None."""
    s = len(yn)
    parent = np.bincount(yn, minlength=n_classes).astype(np.float64)
    parent_imp = gini(parent)
    cols = Xn[:, features]
    order = np.argsort(cols, axis=0, kind="stable")
    xs = np.take_along_axis(cols, order, axis=0)
    onehot = np.zeros((s, len(features), n_classes))
    ys = yn[order]
    onehot[np.arange(s)[:, None], np.arange(len(features))[None, :], ys] = 1.0
    left = np.cumsum(onehot, axis=0)[:-1]
    right = parent[None, None, :] - left
    nl = np.arange(1, s, dtype=np.float64)[:, None]
    nr = s - nl
    # weighted child impurity = nl - sum(l^2)/nl + nr - sum(r^2)/nr
    child = (nl - (left * left).sum(axis=2) / nl + nr - (right * right).sum(axis=2) / nr) / s
    valid = (xs[1:] != xs[:-1]) & (nl >= min_leaf) & (nr >= min_leaf)
    if not valid.any():
        return None
    gain = np.where(valid, parent_imp - child, -np.inf)
    flat = np.argmax(gain.T)  # feature-major: first sampled feature wins ties
    fj, pos = divmod(int(flat), s - 1)
    g = gain[pos, fj]
    if not g > MIN_GAIN:
        return None
    return int(features[fj]), split_threshold(xs[pos, fj], xs[pos + 1, fj]), float(g)


def build_tree(
    X: np.ndarray,
    y: np.ndarray,
    sample: np.ndarray,
    n_classes: int,
    rng: np.random.Generator,
    max_depth: int = 10,
    min_leaf: int = 1,
    features_per_split: int | None = None,
) -> Tree:
    """Grow a tree on rows ``sample`` (duplicates allowed) of ``(X, y)``."""
    m = X.shape[1]
    f_split = m if features_per_split is None else max(1, min(int(features_per_split), m))
    feature, threshold, left, right, counts, impurity = [], [], [], [], [], []

    def grow(idx, depth):
        i = len(feature)
        yn = y[idx]
        cnt = np.bincount(yn, minlength=n_classes).astype(np.float64)
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        counts.append(cnt)
        impurity.append(gini(cnt))
        if depth >= max_depth or len(idx) < 2 * min_leaf or np.count_nonzero(cnt) < 2:
            return i
        feats = rng.choice(m, size=f_split, replace=False)
        best = _best_split(X[idx], yn, n_classes, feats, min_leaf)
        if best is None:
            return i
        f, t, _ = best
        go_left = X[idx, f] <= t
        feature[i] = f
        threshold[i] = t
        left[i] = grow(idx[go_left], depth + 1)
        right[i] = grow(idx[~go_left], depth + 1)
        return i

    grow(np.asarray(sample, dtype=np.int64), 0)
    return Tree(feature, threshold, left, right, counts, impurity)

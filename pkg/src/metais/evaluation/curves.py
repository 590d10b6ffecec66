"""Accuracy vs reduction-rate curves and the areas under them.

A curve starts at the anchor ``(0, score without selection)`` followed by one
point per threshold. Points sharing a reduction rate collapse to their best
score; thresholds whose selection is empty are dropped.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .knn import EmptyTrainingSet, eval_1nn


@dataclass(frozen=True)
class CurvePoint:
    reduction_rate: float
    score: float
    theta: float | None = None
    f1: float | None = None
    n_kept: int | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def collapse(points: Sequence[CurvePoint]) -> list[CurvePoint]:
    """Sort by reduction rate; keep the best-scoring point for every repeated rate."""
    best: dict[float, CurvePoint] = {}
    for p in points:
        q = best.get(p.reduction_rate)
        if q is None or p.score > q.score:
            best[p.reduction_rate] = p
    return [best[r] for r in sorted(best)]


def sweep_from_probabilities(probabilities, d_train, d_test, thetas: Sequence[float]):
    """Curve points for thresholds over given keep-probabilities.

    Returns ``(points, skipped)``; ``skipped`` lists thresholds with an empty selection.
    """
    thetas = [float(t) for t in thetas]
    if any(b < a for a, b in zip(thetas, thetas[1:])):
        raise ValueError("thetas must be ascending")
    p = np.asarray(probabilities, dtype=np.float64)
    n = len(p)
    full = eval_1nn(d_train, d_test)
    points = [CurvePoint(0.0, full["accuracy"], None, full["f1"], n)]
    skipped = []
    for t in thetas:
        keep = p >= t
        try:
            s = eval_1nn(d_train, d_test, keep)
        except EmptyTrainingSet:
            skipped.append(t)
            continue
        kept = int(keep.sum())
        points.append(CurvePoint((n - kept) / n, s["accuracy"], t, s["f1"], kept))
    return points, skipped


def theta_sweep(sel, d_train, d_test, thetas: Sequence[float]) -> list[CurvePoint]:
    """Anchor point followed by one point per non-empty threshold, for a trained selector."""
    points, _ = sweep_from_probabilities(sel.keep_probability(d_train), d_train, d_test, thetas)
    return points


def _xy(curve):
    pts = collapse(curve) if curve and isinstance(curve[0], CurvePoint) else None
    if pts is not None:
        return np.array([p.reduction_rate for p in pts]), np.array([p.score for p in pts])
    arr = np.asarray(curve, dtype=np.float64).reshape(-1, 2)
    return arr[:, 0], arr[:, 1]


def auarr(curve, limit: float = 1.0) -> float:
    """Trapezoidal area under the score curve over reduction rates ``[0, limit]``.

    ``curve`` holds :class:`CurvePoint` objects or ``(reduction_rate, score)``
    pairs sorted by reduction rate. Points past ``limit`` are discarded and the
    curve is linearly interpolated at ``limit``; the area ends at the last point
    when ``limit`` lies beyond it.
    """
    x, y = _xy(curve)
    if x.size == 0:
        raise ValueError("empty curve")
    if np.any(np.diff(x) < 0):
        raise ValueError("curve must be sorted by reduction rate")
    if limit <= 0:
        return 0.0
    inside = x <= limit
    xs, ys = x[inside], y[inside]
    if xs.size and xs[-1] < limit and (~inside).any():
        j = int(np.flatnonzero(~inside)[0])
        x0, y0, x1, y1 = x[j - 1], y[j - 1], x[j], y[j]
        xs = np.append(xs, limit)
        ys = np.append(ys, y0 + (y1 - y0) * (limit - x0) / (x1 - x0))
    if xs.size < 2:
        return 0.0
    return float(np.sum((xs[1:] - xs[:-1]) * (ys[1:] + ys[:-1]) / 2.0))


def auarr_limited(meta_curve, ref_point: tuple[float, float], full_score: float) -> dict:
    """Areas of the meta curve and of the reference segment ``(0, full_score) -> ref_point``.

    The limited areas stop at the reference reduction rate. The unlimited meta
    area runs to the last meta point; the reference segment is not extended past
    its own reduction rate.
    """
    rr_ref, acc_ref = float(ref_point[0]), float(ref_point[1])
    if not 0.0 < rr_ref <= 1.0:
        raise ValueError(f"reference reduction rate must lie in (0, 1], got {rr_ref}")
    ref_curve = [(0.0, float(full_score)), (rr_ref, acc_ref)]
    x, _ = _xy(meta_curve)
    ref_area = auarr(ref_curve, rr_ref)
    return {
        "auarr_L_meta": auarr(meta_curve, rr_ref),
        "auarr_L_ref": ref_area,
        "auarr_meta": auarr(meta_curve, float(x[-1])) if x[-1] > 0 else 0.0,
        "auarr_ref": ref_area,
    }

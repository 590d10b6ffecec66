"""Binary classification metrics for the meta-classifier."""

from __future__ import annotations

import numpy as np
from scipy.stats import rankdata


def auc_score(y_true, scores) -> float | None:
    """ROC AUC as the Mann-Whitney statistic with midranks; None if only one class is present."""
    y = np.asarray(y_true).astype(bool)
    s = np.asarray(scores, dtype=np.float64)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = rankdata(s)
    u = ranks[y].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def balanced_accuracy(y_true, y_pred) -> float:
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    recalls = [np.mean(y_pred[y_true == c] == c) for c in np.unique(y_true)]
    return float(np.mean(recalls))


def accuracy(y_true, y_pred) -> float:
    return float(np.mean(np.asarray(y_true) == np.asarray(y_pred)))


def evaluate_classifier(model, X_test, y_test, threshold: float = 0.5) -> dict:
    """``{"auc", "balanced_accuracy", "accuracy"}`` for keep-probabilities thresholded at 0.5."""
    y = np.asarray(y_test).astype(np.int64)
    if not np.isin(y, (0, 1)).all():
        raise ValueError("test labels must be binary 0/1")
    p = model.proba_of(X_test, 1)
    pred = (p >= threshold).astype(np.int64)
    return {"auc": auc_score(y, p), "balanced_accuracy": balanced_accuracy(y, pred), "accuracy": accuracy(y, pred)}

"""1-NN scoring of a (selected) training set."""

from __future__ import annotations

import numpy as np
from sklearn.metrics import f1_score

from ..nng import knn_query


class EmptyTrainingSet(ValueError):
    """The selection kept no instance, so 1-NN has nothing to predict from."""


def predict_1nn(X_train, y_train, X_test, method: str = "indexed") -> np.ndarray:
    X_train = np.asarray(X_train, dtype=np.float64)
    if len(X_train) == 0:
        raise EmptyTrainingSet("empty training set")
    idx, _ = knn_query(X_train, np.asarray(X_test, dtype=np.float64), k=1, method=method)
    return np.asarray(y_train)[idx[:, 0]]


def f1(y_true, y_pred, n_classes: int) -> float:
    """Binary F1 of class 1 when there are two classes, macro F1 otherwise."""
    if n_classes == 2:
        return float(f1_score(y_true, y_pred, pos_label=1, average="binary", labels=[0, 1], zero_division=0))
    return float(f1_score(y_true, y_pred, average="macro", zero_division=0))


def eval_1nn(train, test, keep=None) -> dict:
    """Accuracy and F1 of 1-NN trained on ``train`` (restricted to ``keep``) and applied to ``test``.

    ``train`` and ``test`` are :class:`~metais.dataset.Dataset` objects over the same classes.
    """
    X, y = train.features, train.labels
    if keep is not None:
        keep = np.asarray(keep, dtype=bool)
        X, y = X[keep], y[keep]
    pred = predict_1nn(X, y, test.features)
    return {
        "accuracy": float(np.mean(pred == test.labels)),
        "f1": f1(test.labels, pred, max(train.n_classes, test.n_classes)),
    }

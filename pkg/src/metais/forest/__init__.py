"""From-scratch tree ensembles for the keep/remove meta-problem."""

from .ensemble import (
    BalancedRandomForest,
    DegenerateModelWarning,
    RandomForest,
    from_dict,
    from_json,
    load,
    predict_proba,
    train_balanced_random_forest,
    train_random_forest,
)
from .importance import ImportanceReport, average_reports, mdi_importance, write_importance_csvs
from .metrics import accuracy, auc_score, balanced_accuracy, evaluate_classifier
from .tree import Tree, build_tree

__all__ = [
    "BalancedRandomForest",
    "DegenerateModelWarning",
    "ImportanceReport",
    "RandomForest",
    "Tree",
    "accuracy",
    "auc_score",
    "average_reports",
    "balanced_accuracy",
    "build_tree",
    "evaluate_classifier",
    "from_dict",
    "from_json",
    "load",
    "mdi_importance",
    "predict_proba",
    "train_balanced_random_forest",
    "train_random_forest",
    "write_importance_csvs",
]

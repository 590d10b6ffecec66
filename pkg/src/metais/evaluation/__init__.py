"""Evaluation harness: 1-NN scoring, threshold sweeps, AUARR, statistics and the dataset-level protocol."""

from .curves import CurvePoint, auarr, auarr_limited, collapse, sweep_from_probabilities, theta_sweep
from .knn import EmptyTrainingSet, eval_1nn, predict_1nn
from .protocol import DatasetReport, EvalReport, FoldResult, leave_one_dataset_out, mean_curve, write_report
from .stats import TestResult, significance, welch_t, wilcoxon_signed_rank
from .timing import speedup, timed, timing

__all__ = [
    "CurvePoint",
    "DatasetReport",
    "EmptyTrainingSet",
    "EvalReport",
    "FoldResult",
    "TestResult",
    "auarr",
    "auarr_limited",
    "collapse",
    "eval_1nn",
    "leave_one_dataset_out",
    "mean_curve",
    "predict_1nn",
    "significance",
    "speedup",
    "sweep_from_probabilities",
    "theta_sweep",
    "timed",
    "timing",
    "welch_t",
    "wilcoxon_signed_rank",
    "write_report",
]

"""Mean decrease in impurity (MDI) and its grouping by descriptor type and by k."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from ..metafeatures import parse_feature_name


def mdi_vector(model) -> np.ndarray:
    """Per-feature MDI averaged over trees and normalised to sum 1 (all zeros without splits)."""
    out = np.zeros(model.n_features_in_)
    for t in model.trees_:
        for f, v in t.impurity_decrease().items():
            out[f] += v
    out /= len(model.trees_)
    total = out.sum()
    return out / total if total > 0 else out


@dataclass(eq=False)
class ImportanceReport:
    feature_names: list[str]
    per_feature_mdi: np.ndarray
    grouped_by_type: dict[str, float]
    grouped_by_k: dict[int, float]

    @property
    def total(self) -> float:
        return float(self.per_feature_mdi.sum())


def group_importance(names, values) -> tuple[dict[str, float], dict[int, float]]:
    by_type: dict[str, float] = {}
    by_k: dict[int, float] = {}
    for name, v in zip(names, values):
        desc, k = parse_feature_name(name)
        by_type[desc] = by_type.get(desc, 0.0) + float(v)
        by_k[k] = by_k.get(k, 0.0) + float(v)
    return by_type, by_k


def mdi_importance(model, feature_names=None) -> ImportanceReport:
    names = feature_names or model.feature_names_
    if names is None:
        raise ValueError("model has no feature names; pass feature_names")
    values = mdi_vector(model)
    by_type, by_k = group_importance(names, values)
    return ImportanceReport(list(names), values, by_type, by_k)


def average_reports(reports) -> ImportanceReport:
    """Element-wise mean of several reports over the same feature names."""
    reports = list(reports)
    names = reports[0].feature_names
    if any(r.feature_names != names for r in reports):
        raise ValueError("reports disagree on feature names")
    values = np.mean([r.per_feature_mdi for r in reports], axis=0)
    by_type, by_k = group_importance(names, values)
    return ImportanceReport(list(names), values, by_type, by_k)


def write_importance_csvs(report: ImportanceReport, prefix) -> list[str]:
    """Write ``<prefix>_features.csv``, ``<prefix>_by_type.csv`` and ``<prefix>_by_k.csv``."""
    paths = []
    tables = [
        ("features", "feature", zip(report.feature_names, report.per_feature_mdi.tolist())),
        ("by_type", "type", report.grouped_by_type.items()),
        ("by_k", "k", report.grouped_by_k.items()),
    ]
    for suffix, key, rows in tables:
        path = f"{prefix}_{suffix}.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([key, "mdi"])
            for name, v in rows:
                w.writerow([name, repr(float(v))])
        paths.append(path)
    return paths

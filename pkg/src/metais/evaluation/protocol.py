"""Leave-one-dataset-out evaluation of meta-selection against its reference algorithm.

For every held-out dataset a selector is trained on the other datasets. The
held-out dataset is split into stratified folds; on each fold the reference
algorithm and the selector run on the training part (input features z-scored
with training-part statistics) and 1-NN trained on each selection is scored on
the test part.

Outputs of :func:`write_report` (all byte-deterministic except ``timing.json``):

``report.json``      full nested report without wall times
``curves.csv``       one row per dataset x fold x theta, plus the anchor row (no theta)
``curves/<name>.csv`` the same rows split per dataset
``summary.csv``      per-dataset means/stds of the areas plus ``wins`` and ``mean_difference`` rows
``importance_*.csv`` MDI of the held-out selectors, averaged, per feature / type / k
``timing.json``      per-fold wall times and speedups
"""

from __future__ import annotations

import csv
import json
import traceback
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..dataset import Dataset, ScalingParams, stratified_kfold
from ..forest import average_reports, mdi_importance, write_importance_csvs
from ..metafeatures import DEFAULT_K_LIST
from ..selection import ALGORITHMS
from ..selector import DEFAULT_THETAS, MetaInstanceSelector, labeled_meta_sets, merge_meta_sets
from .curves import CurvePoint, auarr, auarr_limited, sweep_from_probabilities
from .knn import EmptyTrainingSet, eval_1nn
from .stats import significance
from .timing import speedup, timed


@dataclass
class FoldResult:
    fold: int
    n_train: int
    n_test: int
    full_accuracy: float
    full_f1: float
    ref_reduction_rate: float
    ref_accuracy: float | None
    ref_f1: float | None
    curve: list[CurvePoint]
    skipped_thetas: list[float]
    areas: dict[str, float] | None
    ref_time_ms: float = 0.0
    meta_time_ms: float = 0.0

    def to_dict(self, include_times: bool = False) -> dict:
        out = {
            "fold": self.fold,
            "n_train": self.n_train,
            "n_test": self.n_test,
            "full_accuracy": self.full_accuracy,
            "full_f1": self.full_f1,
            "ref_reduction_rate": self.ref_reduction_rate,
            "ref_accuracy": self.ref_accuracy,
            "ref_f1": self.ref_f1,
            "curve": [p.to_dict() for p in self.curve],
            "skipped_thetas": self.skipped_thetas,
            "areas": self.areas,
        }
        if include_times:
            out["ref_time_ms"] = self.ref_time_ms
            out["meta_time_ms"] = self.meta_time_ms
        return out


@dataclass
class DatasetReport:
    name: str
    trained_on: list[str] = field(default_factory=list)
    folds: list[FoldResult] = field(default_factory=list)
    error: str | None = None
    verdict_L: str | None = None
    p_L: float | None = None
    verdict: str | None = None
    p: float | None = None

    def area(self, key: str) -> np.ndarray:
        return np.array([f.areas[key] for f in self.folds if f.areas is not None])

    def to_dict(self, include_times: bool = False) -> dict:
        return {
            "name": self.name,
            "trained_on": self.trained_on,
            "error": self.error,
            "verdict_L": self.verdict_L,
            "p_L": self.p_L,
            "verdict": self.verdict,
            "p": self.p,
            "folds": [f.to_dict(include_times) for f in self.folds],
        }


@dataclass
class EvalReport:
    reference: str
    classifier: str
    folds: int
    thetas: list[float]
    datasets: list[DatasetReport] = field(default_factory=list)
    importance: object = None

    @property
    def completed(self) -> list[DatasetReport]:
        return [d for d in self.datasets if d.error is None and d.folds]

    def aggregate(self, alpha: float = 0.05) -> dict:
        """Wins, mean difference and the cross-dataset Wilcoxon verdict for both area kinds."""
        done = self.completed
        out = {}
        for key, vkey in (("auarr_L", "verdict_L"), ("auarr", "verdict")):
            meta = np.array([d.area(f"{key}_meta").mean() for d in done])
            ref = np.array([d.area(f"{key}_ref").mean() for d in done])
            wins = sum(getattr(d, vkey) == "+" for d in done)
            if len(done) >= 1:
                verdict, p = significance(meta, ref, "wilcoxon")
                diff = float(np.mean(meta - ref))
            else:
                verdict, p, diff = "=", 1.0, 0.0
            out[key] = {"wins": int(wins), "mean_difference": diff, "verdict": verdict, "p_value": p}
        return out

    def to_dict(self, include_times: bool = False) -> dict:
        return {
            "reference": self.reference,
            "classifier": self.classifier,
            "folds": self.folds,
            "thetas": self.thetas,
            "datasets": [d.to_dict(include_times) for d in self.datasets],
            "aggregate": self.aggregate(),
        }


def _scaled_fold(d: Dataset, tr: np.ndarray, te: np.ndarray) -> tuple[Dataset, Dataset]:
    train = d.subset(tr)
    test = d.subset(te)
    params = ScalingParams.fit(train.features)
    return train.with_features(params.apply(train.features)), test.with_features(params.apply(test.features))


def _zscored(d: Dataset) -> Dataset:
    return d.with_features(ScalingParams.fit(d.features).apply(d.features))


def evaluate_fold(
    sel: MetaInstanceSelector,
    train: Dataset,
    test: Dataset,
    ref_algo: str,
    k: int,
    thetas: Sequence[float],
    fold: int = 0,
) -> FoldResult:
    full = eval_1nn(train, test)
    ref_mask, ref_ms = timed(ALGORITHMS[ref_algo], train, k)
    rr = ref_mask.reduction_rate
    try:
        ref_score = eval_1nn(train, test, ref_mask.keep)
    except EmptyTrainingSet:
        ref_score = None
    probs, meta_ms = timed(sel.keep_probability, train)
    curve, skipped = sweep_from_probabilities(probs, train, test, thetas)
    areas = None
    if ref_score is not None and rr > 0:
        areas = auarr_limited(curve, (rr, ref_score["accuracy"]), full["accuracy"])
    elif ref_score is not None:
        # the reference removed nothing, so its segment has zero width
        x_last = max(pt.reduction_rate for pt in curve)
        areas = {"auarr_L_meta": 0.0, "auarr_L_ref": 0.0, "auarr_meta": auarr(curve, x_last) if x_last > 0 else 0.0,
                 "auarr_ref": 0.0}
    return FoldResult(
        fold=fold,
        n_train=train.n_samples,
        n_test=test.n_samples,
        full_accuracy=full["accuracy"],
        full_f1=full["f1"],
        ref_reduction_rate=rr,
        ref_accuracy=None if ref_score is None else ref_score["accuracy"],
        ref_f1=None if ref_score is None else ref_score["f1"],
        curve=curve,
        skipped_thetas=skipped,
        areas=areas,
        ref_time_ms=ref_ms,
        meta_time_ms=meta_ms,
    )


def leave_one_dataset_out(
    datasets: Sequence[Dataset],
    ref_algo: str = "enn",
    classifier: str = "balanced_rf",
    params: dict | None = None,
    folds: int = 5,
    seed: int = 0,
    k: int = 3,
    k_list: Sequence[int] = DEFAULT_K_LIST,
    thetas: Sequence[float] = DEFAULT_THETAS,
    n_jobs: int = 1,
    alpha: float = 0.05,
    log=None,
) -> EvalReport:
    """Run the protocol; datasets whose reference run or evaluation fails are recorded and skipped."""
    if len(datasets) < 2:
        raise ValueError("leave-one-dataset-out needs at least two datasets")
    names = [d.name for d in datasets]
    if len(set(names)) != len(names):
        raise ValueError(f"dataset names must be unique: {names}")
    if ref_algo not in ALGORITHMS:
        raise ValueError(f"unknown reference algorithm {ref_algo!r}")
    say = log or (lambda msg: None)
    report = EvalReport(ref_algo, classifier, folds, [float(t) for t in thetas])

    scaled = [_zscored(d) for d in datasets]
    parts: dict[str, tuple] = {}
    failures: dict[str, str] = {}
    for d in scaled:
        try:
            parts[d.name] = labeled_meta_sets([d], ref_algo, k, k_list, n_jobs=1)[0]
        except Exception as exc:  # noqa: BLE001 - recorded per dataset
            failures[d.name] = f"{type(exc).__name__}: {exc}"
            say(f"[{d.name}] meta-set failed: {failures[d.name]}")

    importances = []
    for h, held in enumerate(datasets):
        rep = DatasetReport(held.name)
        report.datasets.append(rep)
        if held.name in failures:
            rep.error = failures[held.name]
            continue
        others = [parts[n] for n in names if n != held.name and n in parts]
        if not others:
            rep.error = "no training datasets available"
            continue
        try:
            meta, pooled = merge_meta_sets(others)
            sel = MetaInstanceSelector(
                reference=ref_algo, k=k, k_list=tuple(k_list), classifier=classifier,
                random_state=seed, n_jobs=n_jobs, **(params or {}),
            ).fit_meta(meta, pooled)
            rep.trained_on = list(sel.trained_on_)
            assert held.name not in rep.trained_on
            importances.append(mdi_importance(sel.model_))
            for f, split in enumerate(stratified_kfold(held, folds, seed)):
                train, test = _scaled_fold(held, split.train_indices, split.test_indices)
                rep.folds.append(evaluate_fold(sel, train, test, ref_algo, k, thetas, f))
                say(f"[{held.name}] fold {f + 1}/{folds} done")
        except Exception as exc:  # noqa: BLE001 - recorded per dataset
            rep.error = f"{type(exc).__name__}: {exc}"
            rep.folds = []
            say(f"[{held.name}] failed: {rep.error}\n{traceback.format_exc()}")
            continue
        if len(rep.area("auarr_L_meta")) >= 2:
            rep.verdict_L, rep.p_L = significance(rep.area("auarr_L_meta"), rep.area("auarr_L_ref"), "welch_t", alpha)
            rep.verdict, rep.p = significance(rep.area("auarr_meta"), rep.area("auarr_ref"), "welch_t", alpha)
    report.importance = average_reports(importances) if importances else None
    return report


# output

CURVE_COLUMNS = ["dataset", "fold", "theta", "reduction_rate", "accuracy", "f1", "n_kept",
                 "ref_reduction_rate", "ref_accuracy", "full_accuracy"]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _curve_rows(rep: DatasetReport):
    for f in rep.folds:
        for p in f.curve:
            yield [rep.name, f.fold, p.theta, p.reduction_rate, p.score, p.f1, p.n_kept,
                   f.ref_reduction_rate, f.ref_accuracy, f.full_accuracy]


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def mean_curve(rep: DatasetReport) -> list[tuple[float, float, float]]:
    """Per-theta fold means ``(theta, reduction_rate, accuracy)`` over folds where the theta was scored."""
    acc: dict[float, list] = {}
    for f in rep.folds:
        for p in f.curve:
            if p.theta is not None:
                acc.setdefault(p.theta, []).append((p.reduction_rate, p.score))
    return [(t, float(np.mean([a for a, _ in v])), float(np.mean([b for _, b in v]))) for t, v in sorted(acc.items())]


def summary_rows(report: EvalReport):
    header = ["dataset", "auarr_L_meta_mean", "auarr_L_meta_std", "auarr_L_ref_mean", "auarr_L_ref_std", "verdict_L",
              "auarr_meta_mean", "auarr_meta_std", "auarr_ref_mean", "auarr_ref_std", "verdict",
              "ref_reduction_rate", "ref_accuracy", "full_accuracy", "error"]
    rows = []
    for d in report.datasets:
        if d.error is not None or not d.folds:
            rows.append([d.name] + [None] * 13 + [d.error or "no folds"])
            continue
        row = [d.name]
        for key, verdict in (("auarr_L", d.verdict_L), ("auarr", d.verdict)):
            m, r = d.area(f"{key}_meta"), d.area(f"{key}_ref")
            row += [float(m.mean()), float(m.std()), float(r.mean()), float(r.std()), verdict]
        ref_acc = [f.ref_accuracy for f in d.folds if f.ref_accuracy is not None]
        row += [float(np.mean([f.ref_reduction_rate for f in d.folds])),
                float(np.mean(ref_acc)) if ref_acc else None,
                float(np.mean([f.full_accuracy for f in d.folds])), None]
        rows.append(row)
    agg = report.aggregate()
    blank = [None] * 4
    rows.append(["wins", *blank, agg["auarr_L"]["wins"], *blank, agg["auarr"]["wins"], None, None, None, None])
    rows.append(["mean_difference", agg["auarr_L"]["mean_difference"], None, None, None,
                 f'{agg["auarr_L"]["verdict"]} (p={agg["auarr_L"]["p_value"]:.4g})',
                 agg["auarr"]["mean_difference"], None, None, None,
                 f'{agg["auarr"]["verdict"]} (p={agg["auarr"]["p_value"]:.4g})', None, None, None, None])
    return header, rows


def timing_dict(report: EvalReport) -> dict:
    out = {}
    for d in report.completed:
        ref = [f.ref_time_ms for f in d.folds]
        meta = [f.meta_time_ms for f in d.folds]
        out[d.name] = {
            "ref_time_ms": ref,
            "meta_time_ms": meta,
            "speedup": speedup(float(np.mean(ref)), float(np.mean(meta))),
        }
    return out


def write_report(report: EvalReport, out_dir) -> list[Path]:
    out = Path(out_dir)
    (out / "curves").mkdir(parents=True, exist_ok=True)
    written = []

    p = out / "report.json"
    p.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    written.append(p)

    p = out / "curves.csv"
    _write_csv(p, CURVE_COLUMNS, (r for d in report.datasets for r in _curve_rows(d)))
    written.append(p)
    for d in report.datasets:
        p = out / "curves" / f"{d.name}.csv"
        _write_csv(p, CURVE_COLUMNS, _curve_rows(d))
        written.append(p)

    header, rows = summary_rows(report)
    p = out / "summary.csv"
    _write_csv(p, header, rows)
    written.append(p)

    if report.importance is not None:
        written += [Path(x) for x in write_importance_csvs(report.importance, out / "importance")]

    p = out / "timing.json"
    p.write_text(json.dumps(timing_dict(report), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    written.append(p)
    return written

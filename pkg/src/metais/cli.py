"""Command-line interface.

Subcommands: ``select``, ``meta-train``, ``meta-select``, ``benchmark``,
``importance`` and ``graph-cache``. Every subcommand accepts ``--config`` (TOML
or JSON holding :class:`RunConfig` fields); explicit flags override the file.
The resolved configuration is written to ``run_config.json`` in the output
directory. Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .dataset import DATA_DIR_ENV, load_any
from .evaluation.protocol import leave_one_dataset_out, write_report
from .forest import mdi_importance, write_importance_csvs
from .metafeatures import DEFAULT_K_LIST
from .nng import build_graph, save_graph
from .selection import ALGORITHMS, run_algorithm, write_mask
from .selection.base import SelectionMask
from .selector import DEFAULT_THETAS, CLASSIFIERS, MetaInstanceSelector, labeled_meta_sets, merge_meta_sets

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger("metais")

FOREST_DEFAULTS = {"n_trees": 100, "max_depth": 10, "min_leaf": 1, "features_per_split": 7}


class UsageError(Exception):
    """Invalid configuration; reported with exit code 2."""


@dataclass
class RunConfig:
    datasets: list[str] = field(default_factory=list)
    reference_algorithm: str = "enn"
    k: int = 3
    k_list: list[int] = field(default_factory=lambda: list(DEFAULT_K_LIST))
    classifier: str = "balanced_rf"
    forest: dict = field(default_factory=lambda: dict(FOREST_DEFAULTS))
    thetas: list[float] = field(default_factory=lambda: list(DEFAULT_THETAS))
    theta: float = 0.5
    folds: int = 5
    seed: int = 0
    output: str = "out"
    jobs: int = 1
    query_scaling: str = "own"
    graph_method: str = "indexed"
    label_column: str = "-1"

    def validate(self) -> "RunConfig":
        if self.reference_algorithm not in ALGORITHMS:
            raise UsageError(f"unknown algorithm {self.reference_algorithm!r}; choose from {sorted(ALGORITHMS)}")
        if self.classifier not in CLASSIFIERS:
            raise UsageError(f"unknown classifier {self.classifier!r}; choose from {sorted(CLASSIFIERS)}")
        if self.k < 1:
            raise UsageError("k must be >= 1")
        ks = [int(k) for k in self.k_list]
        if not ks or ks[0] < 1 or any(b <= a for a, b in zip(ks, ks[1:])):
            raise UsageError("k_list must be positive and strictly ascending")
        self.k_list = ks
        unknown = set(self.forest) - set(FOREST_DEFAULTS)
        if unknown:
            raise UsageError(f"unknown forest parameters {sorted(unknown)}")
        self.forest = {**FOREST_DEFAULTS, **self.forest}
        for key, v in self.forest.items():
            if int(v) != v or v < 1:
                raise UsageError(f"forest.{key} must be a positive integer")
        ts = [float(t) for t in self.thetas]
        if not ts or any(not 0 < t < 1 for t in ts) or any(b <= a for a, b in zip(ts, ts[1:])):
            raise UsageError("thetas must be ascending values in (0, 1)")
        self.thetas = ts
        if not 0 < self.theta < 1:
            raise UsageError("theta must lie in (0, 1)")
        if self.folds < 2:
            raise UsageError("folds must be >= 2")
        if self.jobs < 1:
            raise UsageError("jobs must be >= 1")
        if self.query_scaling not in ("own", "pooled"):
            raise UsageError("query_scaling must be 'own' or 'pooled'")
        if self.graph_method not in ("indexed", "brute"):
            raise UsageError("graph_method must be 'indexed' or 'brute'")
        return self

    @property
    def label(self):
        return int(self.label_column) if self.label_column.lstrip("-").isdigit() else self.label_column

    def write(self, out_dir) -> Path:
        p = Path(out_dir) / "run_config.json"
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return p


def load_config_file(path) -> dict:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    try:
        data = tomllib.loads(text) if p.suffix.lower() == ".toml" else json.loads(text)
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot parse config {path}: {exc}") from None
    names = {f.name for f in fields(RunConfig)}
    bad = set(data) - names
    if bad:
        raise UsageError(f"unknown config keys {sorted(bad)}")
    return data


# flag name -> RunConfig field (forest flags map into the nested dict)
_FLAG_FIELDS = {
    "data": "datasets", "algo": "reference_algorithm", "k": "k", "k_list": "k_list",
    "classifier": "classifier", "thetas": "thetas", "theta": "theta", "folds": "folds",
    "seed": "seed", "out": "output", "jobs": "jobs", "query_scaling": "query_scaling",
    "graph_method": "graph_method", "label_column": "label_column",
}
_FOREST_FLAGS = ("n_trees", "max_depth", "min_leaf", "features_per_split")


def resolve_config(args: argparse.Namespace) -> RunConfig:
    data = load_config_file(args.config) if getattr(args, "config", None) else {}
    for flag, name in _FLAG_FIELDS.items():
        v = getattr(args, flag, None)
        if v is not None:
            data[name] = v
    forest = dict(data.get("forest", {}))
    for flag in _FOREST_FLAGS:
        v = getattr(args, flag, None)
        if v is not None:
            forest[flag] = v
    data["forest"] = forest
    try:
        cfg = RunConfig(**data)
    except TypeError as exc:
        raise UsageError(str(exc)) from None
    return cfg.validate()


def _load_datasets(cfg: RunConfig, at_least: int = 1):
    if len(cfg.datasets) < at_least:
        raise UsageError(f"need at least {at_least} dataset(s) (--data)")
    return [load_any(p, cfg.label) for p in cfg.datasets]


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# subcommands


def cmd_select(cfg: RunConfig, args) -> int:
    (d,) = _load_datasets(cfg)[:1]
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    mask = run_algorithm(cfg.reference_algorithm, d, cfg.k)
    write_mask(mask, out / "mask.csv", out / "mask.json", include_time=args.record_time)
    _write_json(out / "timing.json", {"wall_time_ms": mask.wall_time_ms})
    cfg.write(out)
    log.info("%s on %s: kept %d of %d (reduction rate %.4f)", mask.algorithm, d.name, mask.n_kept, mask.n, mask.reduction_rate)
    return 0


def _selector(cfg: RunConfig, oob: bool = False) -> MetaInstanceSelector:
    return MetaInstanceSelector(
        reference=cfg.reference_algorithm, k=cfg.k, k_list=tuple(cfg.k_list), classifier=cfg.classifier,
        threshold=cfg.theta, query_scaling=cfg.query_scaling, graph_method=cfg.graph_method,
        random_state=cfg.seed, n_jobs=cfg.jobs, oob_score=oob, **cfg.forest,
    )


def cmd_meta_train(cfg: RunConfig, args) -> int:
    from .forest import auc_score, balanced_accuracy

    datasets = _load_datasets(cfg)
    out = Path(cfg.output)
    parts = labeled_meta_sets(datasets, cfg.reference_algorithm, cfg.k, cfg.k_list, cfg.graph_method, cfg.jobs)
    meta, pooled = merge_meta_sets(parts)
    sel = _selector(cfg, oob=True).fit_meta(meta, pooled)
    sel.save(out)
    per_dataset = {m.source_name: {"n": len(m), "keep_fraction": float(m.labels.mean())} for m, _ in parts}
    training_log = {
        "trained_on": sel.trained_on_,
        "n_meta_rows": sel.n_meta_rows_,
        "imbalance_rate": sel.imbalance_rate_,
        "per_dataset": per_dataset,
    }
    model = sel.model_
    if model.oob_available_:
        p = model.oob_decision_function_[:, list(model.classes_).index(1)]
        seen = ~np.isnan(p)
        y = meta.labels[seen]
        training_log["oob"] = {
            "n_rows": int(seen.sum()),
            "auc": auc_score(y, p[seen]),
            "balanced_accuracy": balanced_accuracy(y, (p[seen] >= 0.5).astype(np.int64)),
            "accuracy": float(np.mean((p[seen] >= 0.5) == y)),
        }
    _write_json(out / "training_log.json", training_log)
    cfg.write(out)
    log.info("selector trained on %s; keep fraction %.4f", ", ".join(sel.trained_on_), sel.imbalance_rate_)
    return 0


def cmd_meta_select(cfg: RunConfig, args) -> int:
    (d,) = _load_datasets(cfg)[:1]
    sel = MetaInstanceSelector.load(args.bundle)
    sel.set_params(query_scaling=cfg.query_scaling, graph_method=cfg.graph_method)
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    probs = sel.keep_probability(d)
    keep = probs >= cfg.theta
    with open(out / "probabilities.csv", "w", encoding="utf-8") as fh:
        fh.write("index,keep_probability\n")
        for i, p in enumerate(probs.tolist()):
            fh.write(f"{i},{p!r}\n")
    write_mask(SelectionMask(keep, f"meta-{sel.reference}", sel.k), out / "mask.csv", out / "mask.json", include_time=False)
    cfg.write(out)
    log.info("kept %d of %d at theta=%g", int(keep.sum()), len(keep), cfg.theta)
    return 0


def cmd_benchmark(cfg: RunConfig, args) -> int:
    datasets = _load_datasets(cfg, at_least=2)
    report = leave_one_dataset_out(
        datasets, cfg.reference_algorithm, cfg.classifier, cfg.forest, cfg.folds, cfg.seed,
        cfg.k, cfg.k_list, cfg.thetas, cfg.jobs, log=log.info,
    )
    out = Path(cfg.output)
    write_report(report, out)
    cfg.write(out)
    failed = [d.name for d in report.datasets if d.error]
    if failed:
        log.warning("datasets skipped: %s", ", ".join(failed))
    return 0


def cmd_importance(cfg: RunConfig, args) -> int:
    sel = MetaInstanceSelector.load(args.bundle)
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    write_importance_csvs(mdi_importance(sel.model_), out / "importance")
    cfg.write(out)
    return 0


def cmd_graph_cache(cfg: RunConfig, args) -> int:
    (d,) = _load_datasets(cfg)[:1]
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    k_max = args.k_max if args.k_max is not None else max(cfg.k_list)
    g = build_graph(d, min(k_max, d.n_samples - 1), cfg.graph_method)
    save_graph(g, out / f"{d.name}.nng.npz")
    cfg.write(out)
    return 0


COMMANDS = {
    "select": cmd_select,
    "meta-train": cmd_meta_train,
    "meta-select": cmd_meta_select,
    "benchmark": cmd_benchmark,
    "importance": cmd_importance,
    "graph-cache": cmd_graph_cache,
}


def _floats(s: str) -> list[float]:
    return [float(v) for v in s.split(",") if v.strip()]


def _ints(s: str) -> list[int]:
    return [int(v) for v in s.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="metais",
        description=f"Meta-instance selection over nearest-neighbor-graph meta-features. "
        f"Dataset paths are also looked up in ${DATA_DIR_ENV} and among the bundled datasets.",
    )
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML or JSON file with run-config fields")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int)
    common.add_argument("--jobs", type=int)
    common.add_argument("--graph-method", choices=["indexed", "brute"])
    common.add_argument("--label-column", help="label column of CSV inputs (name or index)")

    algo = argparse.ArgumentParser(add_help=False)
    algo.add_argument("--algo", choices=sorted(ALGORITHMS), help="reference instance-selection algorithm")
    algo.add_argument("--k", type=int)

    meta = argparse.ArgumentParser(add_help=False)
    meta.add_argument("--k-list", type=_ints, help="comma-separated meta-feature k values")
    meta.add_argument("--classifier", choices=sorted(CLASSIFIERS))
    meta.add_argument("--n-trees", type=int)
    meta.add_argument("--max-depth", type=int)
    meta.add_argument("--min-leaf", type=int)
    meta.add_argument("--features-per-split", type=int)
    meta.add_argument("--query-scaling", choices=["own", "pooled"])

    p = sub.add_parser("select", parents=[common, algo], help="run a reference algorithm on one dataset")
    p.add_argument("--data", nargs=1)
    p.add_argument("--record-time", action="store_true", help="also put wall_time_ms into mask.json")

    p = sub.add_parser("meta-train", parents=[common, algo, meta], help="train a selector bundle")
    p.add_argument("--data", nargs="+")

    p = sub.add_parser("meta-select", parents=[common], help="apply a selector bundle to a dataset")
    p.add_argument("--bundle", required=True)
    p.add_argument("--data", nargs=1)
    p.add_argument("--theta", type=float)
    p.add_argument("--query-scaling", choices=["own", "pooled"])

    p = sub.add_parser("benchmark", parents=[common, algo, meta], help="leave-one-dataset-out evaluation")
    p.add_argument("--data", nargs="+")
    p.add_argument("--folds", type=int)
    p.add_argument("--thetas", type=_floats, help="comma-separated ascending thresholds")

    p = sub.add_parser("importance", parents=[common], help="MDI importance of a selector bundle")
    p.add_argument("--bundle", required=True)

    p = sub.add_parser("graph-cache", parents=[common], help="precompute a neighbor-graph cache")
    p.add_argument("--data", nargs=1)
    p.add_argument("--k-max", type=int)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)  # exits with 2 on usage errors
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg, args)
    except UsageError as exc:
        ap.print_usage(sys.stderr)
        print(f"metais: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - top-level failure reporting
        log.debug("failure", exc_info=True)
        print(f"metais: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Tabular classification datasets: Keel/CSV loading, z-scoring and stratified folds."""

from __future__ import annotations

import csv
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

__all__ = [
    "Dataset",
    "DatasetError",
    "FoldSplit",
    "KeelParseError",
    "ScalingParams",
    "destandardize",
    "load_bundled",
    "bundled_names",
    "load_csv",
    "load_keel",
    "standardize",
    "stratified_kfold",
]

DATA_DIR_ENV = "METAIS_DATA_DIR"
_BUNDLED_DIR = Path(__file__).parent / "datasets"


class DatasetError(ValueError):
    """Raised for malformed or inconsistent dataset input."""


class KeelParseError(DatasetError):
    def __init__(self, message: str, path=None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}" if where else message)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """An n x m real feature matrix with integer class labels in ``0..c-1``.

    Class ids follow first appearance in the source; ``class_names`` keeps the
    original tokens in that order.
    """

    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...]
    class_names: tuple[str, ...]
    name: str = "dataset"

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels)
        if X.ndim != 2:
            raise DatasetError(f"features must be 2-D, got shape {X.shape}")
        n, m = X.shape
        if n < 1 or m < 1:
            raise DatasetError(f"dataset needs n >= 1 and m >= 1, got {X.shape}")
        if y.shape != (n,):
            raise DatasetError(f"labels shape {y.shape} does not match n={n}")
        if not np.issubdtype(y.dtype, np.integer):
            if not np.all(np.equal(np.mod(y, 1), 0)):
                raise DatasetError("labels must be integer class ids")
        y = y.astype(np.int64)
        c = len(self.class_names)
        if c < 1:
            raise DatasetError("at least one class name is required")
        if y.min() < 0 or y.max() >= c:
            raise DatasetError(f"labels must lie in 0..{c - 1}")
        if len(self.feature_names) != m:
            raise DatasetError(f"{len(self.feature_names)} feature names for {m} columns")
        if not np.all(np.isfinite(X)):
            raise DatasetError("features contain NaN or Inf")
        object.__setattr__(self, "features", _frozen(X))
        object.__setattr__(self, "labels", _frozen(y))
        object.__setattr__(self, "feature_names", tuple(str(s) for s in self.feature_names))
        object.__setattr__(self, "class_names", tuple(str(s) for s in self.class_names))

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def __len__(self) -> int:
        return self.n_samples

    def subset(self, indices, name: str | None = None) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(
            self.features[idx],
            self.labels[idx],
            self.feature_names,
            self.class_names,
            self.name if name is None else name,
        )

    def with_features(self, X: np.ndarray) -> "Dataset":
        return Dataset(X, self.labels, self.feature_names, self.class_names, self.name)

    def equals(self, other: "Dataset") -> bool:
        return (
            self.feature_names == other.feature_names
            and self.class_names == other.class_names
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.labels, other.labels)
        )

    @classmethod
    def from_arrays(cls, X, y, name: str = "dataset", feature_names=None) -> "Dataset":
        """Build a dataset from raw arrays, mapping label values by first appearance."""
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y)
        tokens: dict = {}
        ids = np.empty(len(y), dtype=np.int64)
        for i, v in enumerate(y.tolist()):
            ids[i] = tokens.setdefault(v, len(tokens))
        if feature_names is None:
            feature_names = [f"x{j}" for j in range(X.shape[1] if X.ndim == 2 else 0)]
        return cls(X, ids, tuple(feature_names), tuple(str(t) for t in tokens), name)


@dataclass(frozen=True)
class ScalingParams:
    means: np.ndarray
    stds: np.ndarray

    def __post_init__(self):
        if np.any(np.asarray(self.stds) <= 0):
            raise DatasetError("scaling stds must be strictly positive")

    def apply(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.means) / self.stds

    def inverse(self, Z: np.ndarray) -> np.ndarray:
        return np.asarray(Z, dtype=np.float64) * self.stds + self.means

    @classmethod
    def fit(cls, X: np.ndarray) -> "ScalingParams":
        X = np.asarray(X, dtype=np.float64)
        # a constant column's float mean can differ from its value by one ulp,
        # so detect constants by range and centre them on the value itself
        const = np.ptp(X, axis=0) == 0 if len(X) else np.ones(X.shape[1], dtype=bool)
        means = np.where(const, X[0] if len(X) else 0.0, X.mean(axis=0))
        stds = X.std(axis=0)  # population std
        stds = np.where(const | ~(stds > 0), 1.0, stds)
        return cls(means, stds)


@dataclass(frozen=True)
class FoldSplit:
    train_indices: np.ndarray
    test_indices: np.ndarray


# ---------------------------------------------------------------------------
# Keel .dat
# ---------------------------------------------------------------------------

_ATTR_RE = re.compile(r"""^@attribute\s+('[^']*'|"[^"]*"|[^\s{\[]+)\s*(.*)$""", re.IGNORECASE)
_NUMERIC_TYPES = {"real", "integer", "numeric", "float", "int"}


def _unquote(s: str) -> str:
    s = s.strip()
    if len(s) >= 2 and s[0] == s[-1] and s[0] in "'\"":
        return s[1:-1]
    return s


@dataclass
class _Attr:
    name: str
    nominal: list[str] | None = None
    line: int = 0


def _split_list(s: str) -> list[str]:
    return [_unquote(t) for t in s.split(",") if t.strip()]


def load_keel(path) -> Dataset:
    """Parse a Keel ``.dat`` file.

    Input attributes must be numeric. The output attribute (from ``@outputs``,
    otherwise the last attribute) holds the class tokens.
    """
    path = Path(path)
    attrs: list[_Attr] = []
    outputs: list[str] | None = None
    relation = path.stem
    in_data = False
    rows: list[tuple[int, list[str]]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("%"):
                continue
            if not in_data:
                low = line.lower()
                if low.startswith("@relation"):
                    relation = _unquote(line[len("@relation"):]) or relation
                elif low.startswith("@attribute"):
                    m = _ATTR_RE.match(line)
                    if m is None:
                        raise KeelParseError(f"malformed attribute declaration {line!r}", path, lineno)
                    name, spec = _unquote(m.group(1)), m.group(2).strip()
                    if spec.startswith("{"):
                        if not spec.endswith("}"):
                            raise KeelParseError("unterminated nominal value list", path, lineno)
                        attrs.append(_Attr(name, _split_list(spec[1:-1]), lineno))
                    else:
                        kind = re.split(r"[\s\[]", spec, maxsplit=1)[0].lower()
                        if kind not in _NUMERIC_TYPES:
                            raise KeelParseError(f"unknown attribute type {kind!r}", path, lineno)
                        attrs.append(_Attr(name, None, lineno))
                elif low.startswith("@outputs") or low.startswith("@output"):
                    outputs = _split_list(line.split(None, 1)[1] if " " in line else "")
                elif low.startswith("@inputs") or low.startswith("@input"):
                    pass
                elif low.startswith("@data"):
                    in_data = True
                else:
                    raise KeelParseError(f"unexpected header line {line!r}", path, lineno)
            else:
                rows.append((lineno, [t.strip() for t in line.split(",")]))
    if not in_data:
        raise KeelParseError("missing @data section", path)
    if len(attrs) < 2:
        raise KeelParseError("need at least one input and one output attribute", path)
    names = [a.name for a in attrs]
    if outputs:
        if len(outputs) != 1:
            raise KeelParseError("exactly one output attribute is supported", path)
        if outputs[0] not in names:
            raise KeelParseError(f"output attribute {outputs[0]!r} not declared", path)
        out_pos = names.index(outputs[0])
    else:
        out_pos = len(attrs) - 1
    for j, a in enumerate(attrs):
        if j != out_pos and a.nominal is not None:
            raise KeelParseError(f"categorical input attribute {a.name!r} is not supported", path, a.line)
    if not rows:
        raise KeelParseError("empty data section", path)
    allowed = set(attrs[out_pos].nominal) if attrs[out_pos].nominal is not None else None
    in_pos = [j for j in range(len(attrs)) if j != out_pos]
    X = np.empty((len(rows), len(in_pos)), dtype=np.float64)
    tokens: list[str] = []
    for r, (lineno, cells) in enumerate(rows):
        if len(cells) != len(attrs):
            raise KeelParseError(f"expected {len(attrs)} fields, found {len(cells)}", path, lineno)
        for c, j in enumerate(in_pos):
            try:
                X[r, c] = float(cells[j])
            except ValueError:
                raise KeelParseError(
                    f"non-numeric value {cells[j]!r} for attribute {attrs[j].name!r}", path, lineno
                ) from None
        tok = _unquote(cells[out_pos])
        if allowed is not None and tok not in allowed:
            raise KeelParseError(f"unknown class token {tok!r}", path, lineno)
        tokens.append(tok)
    if not np.all(np.isfinite(X)):
        raise KeelParseError("non-finite feature value", path)
    ds = Dataset.from_arrays(X, np.asarray(tokens, dtype=object), relation, [names[j] for j in in_pos])
    return ds


def load_csv(path, label_column: str | int = -1, name: str | None = None) -> Dataset:
    """Load a CSV with a header row; ``label_column`` is a column name or index."""
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DatasetError(f"{path}: missing header row") from None
        body = [row for row in reader if row and any(cell.strip() for cell in row)]
    if isinstance(label_column, str) and not label_column.lstrip("-").isdigit():
        if label_column not in header:
            raise DatasetError(f"{path}: label column {label_column!r} not found")
        lab = header.index(label_column)
    else:
        lab = int(label_column)
        if not -len(header) <= lab < len(header):
            raise DatasetError(f"{path}: label column index {lab} out of range")
        lab %= len(header)
    if not body:
        raise DatasetError(f"{path}: empty data section")
    feat_cols = [j for j in range(len(header)) if j != lab]
    X = np.empty((len(body), len(feat_cols)), dtype=np.float64)
    tokens = []
    for r, row in enumerate(body, start=1):
        if len(row) != len(header):
            raise DatasetError(f"{path}: row {r} has {len(row)} cells, expected {len(header)}")
        for c, j in enumerate(feat_cols):
            try:
                X[r - 1, c] = float(row[j])
            except ValueError:
                raise DatasetError(
                    f"{path}: row {r}: non-numeric value {row[j]!r} in column {header[j]!r}"
                ) from None
        tokens.append(row[lab].strip())
    return Dataset.from_arrays(
        X, np.asarray(tokens, dtype=object), name or path.stem, [header[j] for j in feat_cols]
    )


def bundled_names() -> list[str]:
    return sorted(p.stem for p in _BUNDLED_DIR.glob("*.dat"))


def load_bundled(name: str) -> Dataset:
    """Load one of the Keel datasets shipped with the package (or from ``$METAIS_DATA_DIR``)."""
    candidates = []
    env = os.environ.get(DATA_DIR_ENV)
    if env:
        candidates.append(Path(env) / f"{name}.dat")
    candidates.append(_BUNDLED_DIR / f"{name}.dat")
    for p in candidates:
        if p.exists():
            return load_keel(p)
    raise FileNotFoundError(f"no dataset named {name!r}; available: {bundled_names()}")


def resolve_path(path) -> Path:
    """Resolve a dataset argument against ``$METAIS_DATA_DIR`` if it is not a file."""
    p = Path(path)
    if p.exists():
        return p
    env = os.environ.get(DATA_DIR_ENV)
    if env and (Path(env) / p).exists():
        return Path(env) / p
    if (_BUNDLED_DIR / p).exists():
        return _BUNDLED_DIR / p
    if (_BUNDLED_DIR / f"{p}.dat").exists():
        return _BUNDLED_DIR / f"{p}.dat"
    raise FileNotFoundError(str(path))


def load_any(path, label_column: str | int = -1) -> Dataset:
    p = resolve_path(path)
    if p.suffix.lower() == ".csv":
        return load_csv(p, label_column)
    return load_keel(p)


# ---------------------------------------------------------------------------
# Scaling and folds
# ---------------------------------------------------------------------------

def standardize(d: Dataset) -> tuple[Dataset, ScalingParams]:
    params = ScalingParams.fit(d.features)
    return d.with_features(params.apply(d.features)), params


def destandardize(d: Dataset, params: ScalingParams) -> Dataset:
    return d.with_features(params.inverse(d.features))


def stratified_kfold(d: Dataset | Sequence[int], folds: int = 5, seed: int = 0) -> list[FoldSplit]:
    """Stratified k-fold split; per-class test counts differ by at most one across folds."""
    y = np.asarray(d.labels if isinstance(d, Dataset) else d)
    n = len(y)
    if folds < 2:
        raise DatasetError("folds must be >= 2")
    if folds > n:
        raise DatasetError(f"folds={folds} exceeds n={n}")
    rng = np.random.default_rng(seed)
    order = []
    for c in np.unique(y):
        members = np.flatnonzero(y == c)
        order.append(members[rng.permutation(len(members))])
    order = np.concatenate(order)
    assign = np.empty(n, dtype=np.int64)
    assign[order] = np.arange(n) % folds
    all_idx = np.arange(n)
    return [
        FoldSplit(all_idx[assign != f], all_idx[assign == f])
        for f in range(folds)
    ]

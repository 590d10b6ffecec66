"""Reference instance-selection algorithms (ENN, Drop3, ICF, HMN-EI, CCIS).

Each algorithm is available both as a function ``Dataset -> SelectionMask`` and
as an estimator with ``fit`` / ``fit_resample``.
"""

from __future__ import annotations

import time

from ..dataset import Dataset
from .base import InstanceSelector, SelectionMask, majority_vote, nearest_enemy, reduction_stats, write_mask
from .ccis import CCIS, ccis_mask, ccis_scores
from .drop import Drop3, drop3_mask
from .enn import ENN, enn_mask
from .hmn import HMNEI, hit_miss_network, hmnei_mask
from .icf import ICF, LocalSetInfo, icf_mask, local_set_info

__all__ = [
    "ALGORITHMS",
    "CCIS",
    "Drop3",
    "ENN",
    "HMNEI",
    "ICF",
    "InstanceSelector",
    "LocalSetInfo",
    "SelectionMask",
    "ccis",
    "ccis_scores",
    "drop3",
    "enn",
    "hit_miss_network",
    "hmnei",
    "icf",
    "local_set_info",
    "majority_vote",
    "nearest_enemy",
    "reduction_stats",
    "run_algorithm",
    "write_mask",
]


def _timed(name: str, k, fn, *args) -> SelectionMask:
    t0 = time.perf_counter()
    keep = fn(*args)
    return SelectionMask(keep, name, k, (time.perf_counter() - t0) * 1e3)


def enn(d: Dataset, k: int = 3) -> SelectionMask:
    return _timed("enn", k, enn_mask, d.features, d.labels, k)


def drop3(d: Dataset, k: int = 3) -> SelectionMask:
    return _timed("drop3", k, drop3_mask, d.features, d.labels, k)


def icf(d: Dataset, k: int = 3) -> SelectionMask:
    return _timed("icf", k, icf_mask, d.features, d.labels, k)


def hmnei(d: Dataset, k: int | None = None) -> SelectionMask:
    return _timed("hmnei", None, hmnei_mask, d.features, d.labels, d.n_classes)


def ccis(d: Dataset, k: int = 3) -> SelectionMask:
    return _timed("ccis", k, ccis_mask, d.features, d.labels, k)


ALGORITHMS = {"enn": enn, "drop3": drop3, "icf": icf, "hmnei": hmnei, "ccis": ccis}
ESTIMATORS = {"enn": ENN, "drop3": Drop3, "icf": ICF, "hmnei": HMNEI, "ccis": CCIS}


def run_algorithm(name: str, d: Dataset, k: int = 3) -> SelectionMask:
    try:
        fn = ALGORITHMS[name.lower()]
    except KeyError:
        raise ValueError(f"unknown algorithm {name!r}; choose from {sorted(ALGORITHMS)}") from None
    return fn(d, k)

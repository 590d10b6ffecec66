"""Wall-clock measurement of the selection step alone."""

from __future__ import annotations

import time


def timed(fn, *args, **kwargs):
    """``(fn(*args, **kwargs), wall_time_ms)`` measured with a monotonic clock."""
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, (time.perf_counter() - t0) * 1e3


def timing(fn, *args, **kwargs) -> float:
    return timed(fn, *args, **kwargs)[1]


def speedup(ref_ms: float, meta_ms: float) -> float:
    return ref_ms / meta_ms if meta_ms > 0 else float("inf")

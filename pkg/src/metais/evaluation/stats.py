"""Paired Wilcoxon signed-rank test, Welch's t-test and the +/=/- verdict."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm, rankdata
from scipy.stats import t as t_dist

EXACT_MAX_N = 50


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    df: float | None = None
    method: str = ""


def _signed_rank_counts(n: int) -> np.ndarray:
    """Number of subsets of {1..n} with each rank sum 0..n(n+1)/2."""
    top = n * (n + 1) // 2
    c = np.zeros(top + 1, dtype=object)
    c[0] = 1
    for r in range(1, n + 1):
        c[r:] = c[r:] + c[:-r].copy()
    return c


def wilcoxon_signed_rank(x, y=None, alternative: str = "two-sided") -> TestResult:
    """Wilcoxon signed-rank test on paired differences ``x - y``.

    Zero differences are dropped and tied magnitudes get midranks. ``statistic``
    is the positive rank sum T+. The p-value is exact (T+ distribution by
    counting) when there are no ties and at most 50 pairs, otherwise from the
    normal approximation with tie-corrected variance. ``alternative="greater"``
    tests whether ``x`` tends to exceed ``y``.
    """
    d = np.asarray(x, dtype=np.float64)
    if y is not None:
        d = d - np.asarray(y, dtype=np.float64)
    d = d[d != 0]
    n = d.size
    if n == 0:
        return TestResult(0.0, 1.0, None, "degenerate")
    r = rankdata(np.abs(d))
    t_plus = float(r[d > 0].sum())
    top = n * (n + 1) / 2
    ties = len(np.unique(np.abs(d))) < n
    if not ties and n <= EXACT_MAX_N:
        counts = _signed_rank_counts(n)
        total = 2**n
        k = int(round(t_plus))
        p_ge = float(sum(counts[k:]) / total)
        p_le = float(sum(counts[: k + 1]) / total)
        method = "exact"
    else:
        _, tc = np.unique(np.abs(d), return_counts=True)
        var = n * (n + 1) * (2 * n + 1) / 24.0 - float(np.sum(tc**3 - tc)) / 48.0
        z = (t_plus - top / 2) / math.sqrt(var) if var > 0 else 0.0
        p_ge = float(norm.sf(z))
        p_le = float(norm.cdf(z))
        method = "normal"
    if alternative == "greater":
        p = p_ge
    elif alternative == "less":
        p = p_le
    elif alternative == "two-sided":
        p = min(1.0, 2 * min(p_ge, p_le))
    else:
        raise ValueError(f"unknown alternative {alternative!r}")
    return TestResult(t_plus, p, None, method)


def welch_t(a, b, alternative: str = "two-sided") -> TestResult:
    """Welch's unequal-variance t-test of mean(a) against mean(b)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise ValueError("each sample needs at least two values")
    va = a.var(ddof=1) / a.size
    vb = b.var(ddof=1) / b.size
    diff = a.mean() - b.mean()
    se2 = va + vb
    if se2 == 0:
        if diff == 0:
            return TestResult(0.0, 1.0, None, "degenerate")
        t = math.copysign(math.inf, diff)
        df = float(a.size + b.size - 2)
    else:
        t = diff / math.sqrt(se2)
        # Welch-Satterthwaite on variances scaled by their maximum, which avoids underflow
        ra, rb = va / max(va, vb), vb / max(va, vb)
        df = (ra + rb) ** 2 / (ra**2 / (a.size - 1) + rb**2 / (b.size - 1))
    p_ge = float(t_dist.sf(t, df))
    p_le = float(t_dist.cdf(t, df))
    if alternative == "greater":
        p = p_ge
    elif alternative == "less":
        p = p_le
    elif alternative == "two-sided":
        p = min(1.0, 2 * min(p_ge, p_le))
    else:
        raise ValueError(f"unknown alternative {alternative!r}")
    return TestResult(float(t), p, float(df), "welch")


def significance(meta_scores, ref_scores, test: str = "wilcoxon", alpha: float = 0.05) -> tuple[str, float]:
    """Verdict ``"+"`` (meta significantly better), ``"-"`` (worse) or ``"="`` with its p-value.

    ``wilcoxon`` runs two one-sided paired tests; ``welch_t`` runs the two-sided
    unpaired test and reads the direction from the sign of the mean difference.
    """
    meta = np.asarray(meta_scores, dtype=np.float64)
    ref = np.asarray(ref_scores, dtype=np.float64)
    if test == "wilcoxon":
        if meta.shape != ref.shape:
            raise ValueError("Wilcoxon needs paired samples of equal length")
        if np.all(meta == ref):
            return "=", 1.0
        greater = wilcoxon_signed_rank(meta, ref, "greater").p_value
        less = wilcoxon_signed_rank(meta, ref, "less").p_value
        if greater < alpha:
            return "+", greater
        if less < alpha:
            return "-", less
        return "=", min(greater, less)
    if test in ("welch_t", "welch"):
        res = welch_t(meta, ref)
        if res.p_value < alpha and res.statistic > 0:
            return "+", res.p_value
        if res.p_value < alpha and res.statistic < 0:
            return "-", res.p_value
        return "=", res.p_value
    raise ValueError(f"unknown test {test!r}")

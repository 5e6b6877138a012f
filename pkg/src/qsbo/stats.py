"""Descriptive statistics and paired significance tests for run comparisons."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import betainc, ndtr

from .errors import DegenerateDataError, InvalidInputError

WILCOXON_EXACT_MAX_N = 25


@dataclass(frozen=True)
class SummaryStats:
    n: int
    mean: float
    median: float
    std_dev: float
    min: float
    max: float


@dataclass(frozen=True)
class TestResult:
    test_name: str
    statistic: float
    p_value: float
    n_pairs: int


def summarize(values: Sequence[float]) -> SummaryStats:
    """Mean, median, sample standard deviation (n - 1), min and max.

    The standard deviation of a single value is reported as 0.
    """
    x = np.asarray(values, dtype=float).ravel()
    if x.size == 0:
        raise InvalidInputError("cannot summarize an empty sample")
    std = float(np.std(x, ddof=1)) if x.size > 1 else 0.0
    return SummaryStats(
        n=int(x.size),
        mean=float(np.mean(x)),
        median=float(np.median(x)),
        std_dev=std,
        min=float(np.min(x)),
        max=float(np.max(x)),
    )


def student_t_sf(t: float, df: float) -> float:
    """Upper-tail probability P(T > t) of Student's t with ``df`` degrees of freedom."""
    if not df > 0:
        raise InvalidInputError("degrees of freedom must be positive")
    t = float(t)
    if t == 0.0:
        return 0.5
    tail = 0.5 * float(betainc(0.5 * df, 0.5, df / (df + t * t)))
    return tail if t > 0 else 1.0 - tail


def _two_sided_t(t: float, df: float) -> float:
    return min(1.0, 2.0 * student_t_sf(abs(t), df))


def _paired(a, b):
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape:
        raise InvalidInputError("paired samples must have equal length")
    return a, b


def paired_t_test(a: Sequence[float], b: Sequence[float]) -> TestResult:
    """Two-sided paired t-test on ``a - b``."""
    a, b = _paired(a, b)
    n = a.size
    if n < 2:
        raise InvalidInputError("paired t-test needs at least two pairs")
    d = a - b
    if np.all(d == 0.0):
        raise DegenerateDataError("all paired differences are zero")
    sd = float(np.std(d, ddof=1))
    if sd == 0.0:
        raise DegenerateDataError("paired differences have zero variance")
    t = float(np.mean(d)) / (sd / math.sqrt(n))
    return TestResult("paired-t", t, _two_sided_t(t, n - 1), n)


def two_sample_t_test(a: Sequence[float], b: Sequence[float], equal_var: bool = False) -> TestResult:
    """Unpaired two-sided t-test; Welch's by default, pooled with ``equal_var``."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    na, nb = a.size, b.size
    if na < 2 or nb < 2:
        raise InvalidInputError("each sample needs at least two values")
    va, vb = np.var(a, ddof=1), np.var(b, ddof=1)
    diff = float(np.mean(a) - np.mean(b))
    if equal_var:
        df = na + nb - 2
        pooled = ((na - 1) * va + (nb - 1) * vb) / df
        se2 = pooled * (1.0 / na + 1.0 / nb)
        name = "student-t"
    else:
        se2 = va / na + vb / nb
        df = se2 ** 2 / ((va / na) ** 2 / (na - 1) + (vb / nb) ** 2 / (nb - 1)) if se2 > 0 else 1.0
        name = "welch-t"
    if se2 == 0.0:
        raise DegenerateDataError("both samples are constant")
    t = diff / math.sqrt(se2)
    return TestResult(name, t, _two_sided_t(t, df), min(na, nb))


def midranks(values: Sequence[float]) -> np.ndarray:
    """Ranks 1..n with tied values sharing the average of their positions."""
    x = np.asarray(values, dtype=float)
    order = np.argsort(x, kind="stable")
    ranks = np.empty(x.size)
    i = 0
    while i < x.size:
        j = i
        while j + 1 < x.size and x[order[j + 1]] == x[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def signed_rank_distribution(ranks: Sequence[float]) -> dict:
    """Exact null distribution of the positive rank sum.

    Every sign pattern is equally likely; the distribution is built by
    convolving one rank at a time.  Ranks may be midranks (multiples of 0.5).
    Returns ``{rank_sum: probability}``.
    """
    doubled = [int(round(2 * r)) for r in ranks]
    counts = np.zeros(sum(doubled) + 1)
    counts[0] = 1.0
    for r in doubled:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: counts.size - r]
        counts = counts + shifted
    probs = counts / 2.0 ** len(doubled)
    return {k / 2.0: float(p) for k, p in enumerate(probs) if p > 0.0}


def wilcoxon_signed_rank(a: Sequence[float], b: Sequence[float]) -> TestResult:
    """Two-sided Wilcoxon signed-rank test on ``a - b``.

    Zero differences are dropped.  The statistic is the smaller of the positive
    and negative rank sums.  The p-value is exact for up to 25 nonzero pairs
    and uses the tie-corrected normal approximation with continuity correction
    beyond that.
    """
    a, b = _paired(a, b)
    d = a - b
    d = d[d != 0.0]
    n = d.size
    if n == 0:
        raise DegenerateDataError("all paired differences are zero")
    ranks = midranks(np.abs(d))
    w_plus = float(np.sum(ranks[d > 0]))
    w_minus = float(np.sum(ranks[d < 0]))
    w = min(w_plus, w_minus)

    if n <= WILCOXON_EXACT_MAX_N:
        dist = signed_rank_distribution(ranks)
        lower = sum(p for s, p in dist.items() if s <= w + 1e-9)
        p = min(1.0, 2.0 * lower)
    else:
        mean = n * (n + 1) / 4.0
        _, tie_counts = np.unique(ranks, return_counts=True)
        var = n * (n + 1) * (2 * n + 1) / 24.0 - np.sum(tie_counts ** 3 - tie_counts) / 48.0
        z = min(0.0, w - mean + 0.5) / math.sqrt(var)
        p = min(1.0, 2.0 * float(ndtr(z)))
    return TestResult("wilcoxon", w, p, n)

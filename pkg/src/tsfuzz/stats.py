"""Two-sample tests, effect size, entropy and confidence intervals."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import stats as _st

Z95 = 1.96
EXACT_MWU_MAX_N = 8


class TestMethod(str, Enum):
    WELCH_T = "welch_t"
    MANN_WHITNEY_U = "mann_whitney_u"


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    method: TestMethod
    n1: int
    n2: int


def _sample(x, min_n, name):
    a = np.asarray(x, dtype=float).ravel()
    if a.size < min_n:
        raise ValueError(f"{name} needs at least {min_n} observations")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite values")
    return a


def welch_t(x, y) -> TestResult:
    """Welch's unequal-variance t-test, two-sided."""
    a = _sample(x, 2, "x")
    b = _sample(y, 2, "y")
    va = a.var(ddof=1) / a.size
    vb = b.var(ddof=1) / b.size
    se2 = va + vb
    if se2 == 0:
        raise ValueError("both samples have zero variance")
    t = (a.mean() - b.mean()) / math.sqrt(se2)
    df = se2**2 / (va**2 / (a.size - 1) + vb**2 / (b.size - 1))
    p = float(min(1.0, 2.0 * _st.t.sf(abs(t), df)))
    return TestResult(float(t), p, TestMethod.WELCH_T, a.size, b.size)


def _midranks(values: np.ndarray) -> np.ndarray:
    return _st.rankdata(values, method="average")


def mann_whitney_u(x, y) -> TestResult:
    """Mann-Whitney U for ``x`` against ``y`` with midranks for ties.

    Uses exact enumeration of rank assignments when the smaller sample has
    at most 8 observations, otherwise the tie-corrected normal
    approximation with continuity correction.
    """
    a = _sample(x, 1, "x")
    b = _sample(y, 1, "y")
    n1, n2 = a.size, b.size
    pooled = np.concatenate([a, b])
    ranks = _midranks(pooled)
    u = float(ranks[:n1].sum() - n1 * (n1 + 1) / 2)
    if np.all(pooled == pooled[0]):
        return TestResult(u, 1.0, TestMethod.MANN_WHITNEY_U, n1, n2)
    if min(n1, n2) <= EXACT_MWU_MAX_N:
        p = _mwu_exact_p(ranks, n1)
    else:
        n = n1 + n2
        _, counts = np.unique(pooled, return_counts=True)
        tie = float(np.sum(counts**3 - counts)) / (n * (n - 1))
        sigma = math.sqrt(n1 * n2 / 12.0 * ((n + 1) - tie))
        z = (abs(u - n1 * n2 / 2.0) - 0.5) / sigma
        p = float(min(1.0, 2.0 * _st.norm.sf(z)))
    return TestResult(u, p, TestMethod.MANN_WHITNEY_U, n1, n2)


def _mwu_exact_p(ranks: np.ndarray, n1: int) -> float:
    """Two-sided p over all C(n, n1) equally likely rank subsets.

    Midranks are at most half-integers, so doubled ranks index an integer
    rank-sum table.
    """
    r2 = np.rint(2 * ranks).astype(np.int64)
    total = int(r2.sum())
    # ways[k, s]: subsets of size k with doubled rank sum s
    ways = np.zeros((n1 + 1, total + 1))
    ways[0, 0] = 1.0
    for r in r2:
        ways[1:, r:] += ways[:-1, : total + 1 - r].copy()
    dist = ways[n1]
    sums = np.arange(total + 1)
    centre = n1 * total / (r2.size)  # expected doubled rank sum
    observed = abs(int(r2[:n1].sum()) - centre)
    extreme = np.abs(sums - centre) >= observed - 1e-9
    return float(min(1.0, dist[extreme].sum() / dist.sum()))


def cohens_d(x, y) -> float:
    """Standardised mean difference with the pooled sample SD."""
    a = _sample(x, 2, "x")
    b = _sample(y, 2, "y")
    return cohens_d_from_stats(a.mean(), a.std(ddof=1), a.size, b.mean(), b.std(ddof=1), b.size)


def cohens_d_from_stats(mean1, sd1, n1, mean2, sd2, n2) -> float:
    if n1 < 2 or n2 < 2:
        raise ValueError("each sample needs at least 2 observations")
    pooled = math.sqrt(((n1 - 1) * sd1**2 + (n2 - 1) * sd2**2) / (n1 + n2 - 2))
    if pooled == 0:
        raise ValueError("zero pooled standard deviation")
    return float((mean1 - mean2) / pooled)


def shannon_diversity(counts) -> float:
    """Entropy in nats of the class distribution given by ``counts``."""
    c = np.asarray(counts, dtype=float).ravel()
    if np.any(c < 0) or c.sum() <= 0:
        raise ValueError("counts must be non-negative with a positive sum")
    p = c[c > 0] / c.sum()
    return float(-(p * np.log(p)).sum()) + 0.0


def mean_ci95(x) -> tuple[float, float]:
    a = _sample(x, 2, "x")
    return mean_ci95_from_stats(a.mean(), a.std(ddof=1), a.size)


def mean_ci95_from_stats(mean, sd, n) -> tuple[float, float]:
    """Normal-approximation interval ``mean ± 1.96·sd/√n``."""
    if n < 2:
        raise ValueError("n must be >= 2")
    half = Z95 * sd / math.sqrt(n)
    return float(mean - half), float(mean + half)

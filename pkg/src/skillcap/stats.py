"""Correlation coefficients and the Mann-Whitney U test."""

from __future__ import annotations

import csv
import io
import itertools
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np

STRONG_CORRELATION = 0.6

# Exact null distribution is enumerated up to this pooled sample size.
EXACT_MAX_N = 12


class UndefinedResultError(ValueError):
    """The statistic is undefined for this input (e.g. zero variance)."""


@dataclass(frozen=True)
class CorrelationResult:
    coefficient: float
    n: int


@dataclass(frozen=True)
class UTestResult:
    U: float
    p_value: float
    direction: str
    exact: bool


def _pair(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"need two equal-length 1-D samples, got {x.shape} and {y.shape}")
    if len(x) < 2:
        raise ValueError("need at least two observations")
    return x, y


def pearson(x: Sequence[float], y: Sequence[float]) -> CorrelationResult:
    x, y = _pair(x, y)
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(np.dot(dx, dx))
    syy = float(np.dot(dy, dy))
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedResultError("correlation undefined: a sample has zero variance")
    r = float(np.dot(dx, dy)) / math.sqrt(sxx * syy)
    return CorrelationResult(min(1.0, max(-1.0, r)), len(x))


def average_ranks(values: Sequence[float]) -> np.ndarray:
    """1-based ranks; tied values share the mean of their positions."""
    a = np.asarray(values, dtype=float)
    order = np.argsort(a, kind="mergesort")
    ranks = np.empty(len(a), dtype=float)
    sorted_a = a[order]
    i = 0
    n = len(a)
    while i < n:
        j = i
        while j + 1 < n and sorted_a[j + 1] == sorted_a[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman(x: Sequence[float], y: Sequence[float]) -> CorrelationResult:
    x, y = _pair(x, y)
    return pearson(average_ranks(x), average_ranks(y))


def _u_statistic(a: np.ndarray, b: np.ndarray) -> float:
    diff = a[:, None] - b[None, :]
    return float(np.count_nonzero(diff > 0) + 0.5 * np.count_nonzero(diff == 0))


def _exact_null(pooled: np.ndarray, n1: int) -> np.ndarray:
    """U of the first group for every way of choosing n1 of the pooled values."""
    ranks = average_ranks(pooled)
    n = len(pooled)
    combos = np.array(list(itertools.combinations(range(n), n1)), dtype=np.int64)
    rank_sums = ranks[combos].sum(axis=1)
    return rank_sums - n1 * (n1 + 1) / 2.0


def _normal_p(u: float, n1: int, n2: int, pooled: np.ndarray, direction: str) -> float:
    n = n1 + n2
    mean = n1 * n2 / 2.0
    _, counts = np.unique(pooled, return_counts=True)
    tie_term = float(np.sum(counts**3 - counts)) / (n * (n - 1)) if n > 1 else 0.0
    var = n1 * n2 / 12.0 * ((n + 1) - tie_term)
    if var <= 0:
        return 1.0
    sd = math.sqrt(var)

    def upper(stat):  # P(U >= stat) with continuity correction
        return 0.5 * math.erfc(((stat - mean - 0.5) / sd) / math.sqrt(2.0))

    def lower(stat):
        return 0.5 * math.erfc((-(stat - mean + 0.5) / sd) / math.sqrt(2.0))

    if direction == "greater":
        return min(1.0, upper(u))
    if direction == "less":
        return min(1.0, lower(u))
    return min(1.0, 2.0 * min(upper(u), lower(u)))


def mann_whitney_u(
    a: Sequence[float], b: Sequence[float], direction: str = "two-sided", exact: bool | None = None
) -> UTestResult:
    """U test of group ``a`` against group ``b``.

    ``U`` counts pairs with a > b (ties count one half). ``direction="greater"``
    tests whether ``a`` tends to exceed ``b``. Small samples (pooled size up
    to ``EXACT_MAX_N``) use the exact permutation distribution, larger ones a
    tie-corrected normal approximation.
    """
    if direction not in ("greater", "less", "two-sided"):
        raise ValueError(f"unknown direction {direction!r}")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(a) == 0 or len(b) == 0:
        raise ValueError("both groups must be non-empty")
    n1, n2 = len(a), len(b)
    u = _u_statistic(a, b)
    pooled = np.concatenate([a, b])
    use_exact = (n1 + n2 <= EXACT_MAX_N) if exact is None else exact
    if use_exact:
        null = _exact_null(pooled, n1)
        tol = 1e-9
        p_greater = float(np.mean(null >= u - tol))
        p_less = float(np.mean(null <= u + tol))
        p = {"greater": p_greater, "less": p_less}.get(direction)
        if p is None:
            p = min(1.0, 2.0 * min(p_greater, p_less))
    else:
        p = _normal_p(u, n1, n2, pooled, direction)
    return UTestResult(u, p, direction, use_exact)


def correlation_matrix(metrics: Mapping[str, Sequence[float]]) -> dict[str, dict[str, float]]:
    """Pairwise Spearman coefficients over rows where both values are finite.

    Missing values may be given as NaN. Undefined cells are NaN.
    """
    names = list(metrics)
    lengths = {len(v) for v in metrics.values()}
    if len(lengths) > 1:
        raise ValueError("all metric columns must have the same length")
    out: dict[str, dict[str, float]] = {n: {} for n in names}
    cols = {n: np.asarray(metrics[n], dtype=float) for n in names}
    for i, a in enumerate(names):
        for b in names[i:]:
            # pairwise-complete observations
            ok = np.isfinite(cols[a]) & np.isfinite(cols[b])
            try:
                rho = spearman(cols[a][ok], cols[b][ok]).coefficient
            except ValueError:
                rho = math.nan
            if a == b and not math.isnan(rho):
                rho = 1.0
            out[a][b] = out[b][a] = rho
    return out


def matrix_csv(matrix: Mapping[str, Mapping[str, float]]) -> str:
    names = list(matrix)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([""] + names)
    for a in names:
        w.writerow([a] + ["" if math.isnan(matrix[a][b]) else f"{matrix[a][b]:.4f}" for b in names])
    return buf.getvalue()

"""Complexity measures for symbol sequences and sampled signals."""

from __future__ import annotations

import heapq
import math
from collections import Counter
from collections.abc import Hashable, Sequence
from dataclasses import dataclass

import numba
import numpy as np


@dataclass(frozen=True)
class SampEnParams:
    m: int = 2
    r_tol: float = 0.2

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"embedding length m must be >= 1, got {self.m}")
        if not self.r_tol > 0:
            raise ValueError(f"r_tol must be positive, got {self.r_tol}")


def _nonempty(seq) -> None:
    if len(seq) == 0:
        raise ValueError("sequence must be non-empty")


def lzw_code_count(seq: Sequence[Hashable]) -> int:
    """Number of codes an LZW encoder emits for ``seq``.

    The dictionary starts with the distinct single symbols of the sequence,
    numbered in order of first appearance; each new phrase extends a known
    phrase by one symbol.
    """
    _nonempty(seq)
    alphabet: dict = {}
    symbols = [alphabet.setdefault(s, len(alphabet)) for s in seq]
    k = len(alphabet)
    # phrase (prefix code w, symbol c) is keyed as w * k + c
    phrases: dict[int, int] = {}
    next_code = k
    emitted = 0
    w = symbols[0]
    for c in symbols[1:]:
        key = w * k + c
        nxt = phrases.get(key)
        if nxt is not None:
            w = nxt
        else:
            emitted += 1
            phrases[key] = next_code
            next_code += 1
            w = c
    return emitted + 1


def _symbol_order(symbols) -> dict:
    try:
        ordered = sorted(symbols)
    except TypeError:
        ordered = sorted(symbols, key=repr)
    return {s: i for i, s in enumerate(ordered)}


def huffman_code(seq: Sequence[Hashable]) -> dict:
    """Prefix code built from the empirical symbol frequencies of ``seq``.

    Ties are broken by merging the nodes whose smallest symbol sorts first,
    so the code is reproducible. A one-symbol alphabet gets the code "0".
    """
    _nonempty(seq)
    counts = Counter(seq)
    order = _symbol_order(counts)
    if len(counts) == 1:
        return {next(iter(counts)): "0"}
    # heap item: (weight, smallest symbol rank, tiebreak id, symbols in subtree)
    heap = [(w, order[s], order[s], [s]) for s, w in counts.items()]
    heapq.heapify(heap)
    codes = {s: "" for s in counts}
    next_id = len(heap)
    while len(heap) > 1:
        w1, r1, _, left = heapq.heappop(heap)
        w2, r2, _, right = heapq.heappop(heap)
        for s in left:
            codes[s] = "0" + codes[s]
        for s in right:
            codes[s] = "1" + codes[s]
        heapq.heappush(heap, (w1 + w2, min(r1, r2), next_id, left + right))
        next_id += 1
    return codes


def huffman_bits(seq: Sequence[Hashable]) -> int:
    """Total length in bits of ``seq`` Huffman-encoded with its own statistics."""
    _nonempty(seq)
    counts = Counter(seq)
    if len(counts) == 1:
        return len(seq)
    # total length equals the sum of all merged node weights
    heap = list(counts.values())
    heapq.heapify(heap)
    total = 0
    while len(heap) > 1:
        merged = heapq.heappop(heap) + heapq.heappop(heap)
        total += merged
        heapq.heappush(heap, merged)
    return total


def shannon_entropy(seq: Sequence[Hashable]) -> float:
    """Empirical entropy in bits per symbol."""
    _nonempty(seq)
    n = len(seq)
    h = 0.0
    for c in Counter(seq).values():
        p = c / n
        h -= p * math.log2(p)
    return h if h > 0 else 0.0


@numba.njit(cache=True)
def _count_matches(u, w, m, r):
    # u: unique (m+1)-templates sorted by first column, w: multiplicities
    k = u.shape[0]
    a = 0
    b = 0
    for i in range(k):
        wi = w[i]
        same = wi * (wi - 1) // 2
        a += same
        b += same
        for j in range(i + 1, k):
            if u[j, 0] - u[i, 0] > r:
                break
            ok = True
            for c in range(1, m):
                if abs(u[i, c] - u[j, c]) > r:
                    ok = False
                    break
            if ok:
                pair = wi * w[j]
                b += pair
                if abs(u[i, m] - u[j, m]) <= r:
                    a += pair
    return a, b


def template_match_counts(series, m: int, r: float) -> tuple[int, int]:
    """(A, B): pairs of the N-m templates matching at length m+1 and m."""
    x = np.asarray(series, dtype=np.float64)
    n = len(x)
    templates = np.lib.stride_tricks.sliding_window_view(x, m + 1)[: n - m]
    unique, weights = np.unique(templates, axis=0, return_counts=True)
    a, b = _count_matches(np.ascontiguousarray(unique), weights.astype(np.int64), m, float(r))
    return int(a), int(b)


def sample_entropy(series: Sequence[float], p: SampEnParams = SampEnParams()) -> float:
    """Sample entropy -ln(A/B) with Chebyshev matching and no self-matches.

    The tolerance is ``p.r_tol`` times the population standard deviation.
    Returns NaN when either count is zero (the statistic is undefined).
    """
    x = np.asarray(series, dtype=np.float64)
    if len(x) < p.m + 2:
        raise ValueError(f"series of length {len(x)} too short for m={p.m}")
    if not np.all(np.isfinite(x)):
        raise ValueError("series contains non-finite values")
    r = p.r_tol * float(x.std())
    a, b = template_match_counts(x, p.m, r)
    if a == 0 or b == 0:
        return math.nan
    return -math.log(a / b)


def dft_band_features(
    series: Sequence[float], sample_hz: float, bands: Sequence[tuple[float, float]]
) -> dict[tuple[float, float], float]:
    """Share of non-DC spectral power falling in each ``(lo, hi]`` band.

    Power is taken over the full two-sided spectrum, folded onto
    non-negative frequencies. All shares are 0 when there is no non-DC power.
    """
    x = np.asarray(series, dtype=np.float64)
    if len(x) < 2:
        raise ValueError("need at least two samples")
    n = len(x)
    spec = np.fft.rfft(x)
    power = np.abs(spec) ** 2
    freqs = np.fft.rfftfreq(n, d=1.0 / sample_hz)
    weight = np.full(len(power), 2.0)
    weight[0] = 0.0
    if n % 2 == 0:
        weight[-1] = 1.0
    power = power * weight
    total = float(power.sum())
    # leakage of a constant signal is rounding noise relative to its energy
    floor = 1e-20 * n * float(np.dot(x, x))
    out = {}
    for lo, hi in bands:
        if total <= floor:
            out[(lo, hi)] = 0.0
        else:
            sel = (freqs > lo) & (freqs <= hi)
            out[(lo, hi)] = float(power[sel].sum()) / total
    return out

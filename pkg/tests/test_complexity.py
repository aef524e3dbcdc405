import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from skillcap.features.complexity import (
    SampEnParams, dft_band_features, huffman_bits, huffman_code, lzw_code_count, sample_entropy,
    shannon_entropy, template_match_counts,
)


def lzw_reference(seq):
    # textbook encoder over tuples of symbols
    table = {(s,): i for i, s in enumerate(dict.fromkeys(seq))}
    out, w = [], ()
    for c in seq:
        wc = w + (c,)
        if wc in table:
            w = wc
        else:
            out.append(table[w])
            table[wc] = len(table)
            w = (c,)
    out.append(table[w])
    return len(out)


def counts_reference(x, m, r):
    n = len(x)
    a = b = 0
    for i in range(n - m):
        for j in range(i + 1, n - m):
            if max(abs(x[i + k] - x[j + k]) for k in range(m)) <= r:
                b += 1
                if abs(x[i + m] - x[j + m]) <= r:
                    a += 1
    return a, b


def band_reference(x, hz, bands):
    n = len(x)
    k = np.arange(n)
    spec = np.array([np.sum(x * np.exp(-2j * np.pi * f * k / n)) for f in range(n)])
    power = np.abs(spec) ** 2
    freqs = np.minimum(k, n - k) * hz / n
    power[0] = 0.0
    total = power.sum()
    return {b: float(power[(freqs > b[0]) & (freqs <= b[1])].sum() / total) for b in bands}


@pytest.mark.parametrize("text, expected", [("a", 1), ("aaaa", 3), ("abababa", 4), ("TOBEORNOTTOBEORTOBEORNOT", 16)])
def test_lzw_known(text, expected):
    assert lzw_code_count(text) == expected
    assert lzw_reference(text) == expected


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 4), min_size=1, max_size=300))
def test_lzw_matches_reference(seq):
    assert lzw_code_count(seq) == lzw_reference(seq)
    assert lzw_code_count(seq) <= len(seq)


def test_lzw_all_distinct_emits_one_code_per_symbol():
    assert lzw_code_count(list(range(50))) == 50


def test_lzw_rejects_empty():
    with pytest.raises(ValueError):
        lzw_code_count([])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.sampled_from("abcdefg"), min_size=1, max_size=200))
def test_huffman_bounds_and_prefix_property(seq):
    n = len(seq)
    bits = huffman_bits(seq)
    h = shannon_entropy(seq)
    codes = huffman_code(seq)
    assert sum(len(codes[s]) for s in seq) == bits
    if len(codes) > 1:
        assert h * n - 1e-9 <= bits < (h + 1) * n
        words = sorted(codes.values())
        assert not any(b.startswith(a) for a, b in zip(words, words[1:]))
    else:
        assert bits == n


def test_huffman_deterministic_ties():
    assert huffman_code("abcd") == huffman_code("dcba")
    assert huffman_bits("aabbccdd") == 16


def test_entropy():
    assert shannon_entropy("aaaa") == 0.0
    assert shannon_entropy("abab") == pytest.approx(1.0)
    assert shannon_entropy("abcd") == pytest.approx(2.0)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.integers(0, 5), min_size=4, max_size=60),
    st.integers(1, 3),
    st.sampled_from([0.0, 0.5, 1.0, 2.0]),
)
def test_template_counts_match_brute_force(xs, m, r):
    if len(xs) < m + 2:
        return
    x = np.array(xs, dtype=float)
    assert template_match_counts(x, m, r) == counts_reference(x, m, r)


def test_sample_entropy_values():
    rng = np.random.default_rng(2)
    x = rng.normal(size=300)
    a, b = counts_reference(x, 2, 0.2 * x.std())
    assert sample_entropy(x) == pytest.approx(-math.log(a / b))
    # a periodic signal is far more regular than noise
    assert sample_entropy(np.sin(np.arange(300) * 0.3)) < sample_entropy(x)
    assert math.isnan(sample_entropy(np.arange(10.0), SampEnParams(m=2, r_tol=0.01)))
    with pytest.raises(ValueError):
        sample_entropy([1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        SampEnParams(m=0)


@pytest.mark.parametrize("n", [63, 64, 100])
def test_dft_bands_match_direct_transform(n):
    rng = np.random.default_rng(n)
    x = rng.normal(size=n)
    bands = ((0.0, 5.0), (5.0, 20.0), (20.0, 50.0))
    got = dft_band_features(x, 100.0, bands)
    ref = band_reference(x, 100.0, bands)
    for b in bands:
        assert got[b] == pytest.approx(ref[b], abs=1e-9)
    assert sum(got.values()) == pytest.approx(1.0)


def test_dft_pure_tone_and_constant():
    t = np.arange(200) / 100.0
    got = dft_band_features(np.sin(2 * np.pi * 5 * t) + 3.0, 100.0, ((0, 4), (4, 8), (8, 50)))
    assert got[(4, 8)] == pytest.approx(1.0)
    flat = dft_band_features(np.full(50, 7.0), 100.0, ((0, 50),))
    assert flat[(0, 50)] == 0.0

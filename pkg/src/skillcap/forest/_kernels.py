"""Compiled tree-building and prediction kernels.

Trees are stored as flat arrays: ``feature`` (-1 for leaves), ``threshold``,
``left``, ``right`` and ``value`` (class index or mean target of a leaf).
Samples with ``x[feature] <= threshold`` go left.
"""

import numba
import numpy as np


@numba.njit(cache=True)
def _next(state):
    # splitmix64; state is a 1-element uint64 array
    state[0] += np.uint64(0x9E3779B97F4A7C15)
    z = state[0]
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@numba.njit(cache=True)
def _randint(state, n):
    return np.int64(_next(state) % np.uint64(n))


@numba.njit(cache=True)
def _gini_sum(counts, total):
    # total * gini = total - sum(c^2)/total
    if total == 0:
        return 0.0
    s = 0.0
    for c in counts:
        s += c * c
    return total - s / total


@numba.njit(cache=True)
def build_tree(X, y_cls, y_reg, sample, n_classes, mtry, min_leaf, seed):
    """Grow one unpruned tree on the rows listed in ``sample``.

    ``n_classes > 0`` selects Gini classification on ``y_cls``; otherwise
    variance reduction on ``y_reg``.
    """
    n = sample.shape[0]
    d = X.shape[1]
    cap = 2 * n + 1
    feature = np.full(cap, -1, np.int64)
    threshold = np.zeros(cap, np.float64)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    value = np.zeros(cap, np.float64)
    importance = np.zeros(d, np.float64)

    state = np.zeros(1, np.uint64)
    state[0] = np.uint64(seed)
    idx = sample.copy()
    perm = np.arange(d)
    vals = np.empty(n, np.float64)
    order = np.empty(n, np.int64)
    counts = np.zeros(max(n_classes, 1), np.float64)
    lcounts = np.zeros(max(n_classes, 1), np.float64)

    # stack of (node, start, end)
    stack_node = np.empty(cap, np.int64)
    stack_start = np.empty(cap, np.int64)
    stack_end = np.empty(cap, np.int64)
    top = 0
    stack_node[0] = 0
    stack_start[0] = 0
    stack_end[0] = n
    top = 1
    n_nodes = 1

    while top > 0:
        top -= 1
        node = stack_node[top]
        start = stack_start[top]
        end = stack_end[top]
        m = end - start

        # node statistics
        if n_classes > 0:
            counts[:] = 0.0
            for i in range(start, end):
                counts[y_cls[idx[i]]] += 1.0
            best_c = 0
            for c in range(n_classes):
                if counts[c] > counts[best_c]:
                    best_c = c
            value[node] = best_c
            parent = _gini_sum(counts, m)
        else:
            # sums of deviations from the first target keep constant nodes exact
            y0 = y_reg[idx[start]]
            s = 0.0
            ss = 0.0
            for i in range(start, end):
                v = y_reg[idx[i]] - y0
                s += v
                ss += v * v
            value[node] = y0 + s / m
            parent = ss - s * s / m
            if parent < 0.0:
                parent = 0.0

        if parent <= 1e-12 or m < 2 * min_leaf:
            continue

        best_gain = 0.0
        best_f = -1
        best_thr = 0.0
        # partial Fisher-Yates: first mtry entries of perm are the candidates
        for k in range(mtry):
            j = k + _randint(state, d - k)
            tmp = perm[k]
            perm[k] = perm[j]
            perm[j] = tmp
        for k in range(mtry):
            f = perm[k]
            for i in range(m):
                vals[i] = X[idx[start + i], f]
            o = np.argsort(vals[:m], kind="mergesort")
            for i in range(m):
                order[i] = o[i]
            if vals[order[0]] == vals[order[m - 1]]:
                continue
            if n_classes > 0:
                lcounts[:] = 0.0
                for i in range(m - 1):
                    r = idx[start + order[i]]
                    lcounts[y_cls[r]] += 1.0
                    nl = i + 1
                    nr = m - nl
                    a = vals[order[i]]
                    b = vals[order[i + 1]]
                    if a == b or nl < min_leaf or nr < min_leaf:
                        continue
                    sl = 0.0
                    sr = 0.0
                    for c in range(n_classes):
                        sl += lcounts[c] * lcounts[c]
                        rc = counts[c] - lcounts[c]
                        sr += rc * rc
                    child = (nl - sl / nl) + (nr - sr / nr)
                    gain = parent - child
                    if gain > best_gain + 1e-12:
                        best_gain = gain
                        best_f = f
                        best_thr = 0.5 * (a + b)
                        if best_thr == b:
                            best_thr = a
            else:
                sl = 0.0
                total = 0.0
                for i in range(m):
                    total += y_reg[idx[start + order[i]]]
                for i in range(m - 1):
                    sl += y_reg[idx[start + order[i]]]
                    nl = i + 1
                    nr = m - nl
                    a = vals[order[i]]
                    b = vals[order[i + 1]]
                    if a == b or nl < min_leaf or nr < min_leaf:
                        continue
                    sr = total - sl
                    # SSE decrease = sl^2/nl + sr^2/nr - total^2/m
                    gain = sl * sl / nl + sr * sr / nr - total * total / m
                    if gain > best_gain + 1e-12:
                        best_gain = gain
                        best_f = f
                        best_thr = 0.5 * (a + b)
                        if best_thr == b:
                            best_thr = a

        if best_f < 0:
            continue

        # partition idx[start:end] in place
        lo = start
        hi = end - 1
        while lo <= hi:
            if X[idx[lo], best_f] <= best_thr:
                lo += 1
            else:
                tmp = idx[lo]
                idx[lo] = idx[hi]
                idx[hi] = tmp
                hi -= 1
        mid = lo
        if mid == start or mid == end:
            continue

        importance[best_f] += best_gain
        feature[node] = best_f
        threshold[node] = best_thr
        left[node] = n_nodes
        right[node] = n_nodes + 1
        stack_node[top] = n_nodes + 1
        stack_start[top] = mid
        stack_end[top] = end
        top += 1
        stack_node[top] = n_nodes
        stack_start[top] = start
        stack_end[top] = mid
        top += 1
        n_nodes += 2

    return (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        value[:n_nodes].copy(),
        importance,
    )


@numba.njit(cache=True)
def predict_trees(X, offsets, feature, threshold, left, right, value):
    """Leaf value of every tree for every row: shape (rows, trees)."""
    n = X.shape[0]
    t = offsets.shape[0] - 1
    out = np.empty((n, t), np.float64)
    for r in range(n):
        for k in range(t):
            base = offsets[k]
            node = 0
            while feature[base + node] >= 0:
                if X[r, feature[base + node]] <= threshold[base + node]:
                    node = left[base + node]
                else:
                    node = right[base + node]
            out[r, k] = value[base + node]
    return out

"""Reference regression-tree builder (numpy).

The compiled kernel in ``_ctree.pyx`` implements exactly this algorithm,
including the xorshift64* PRNG used for per-node feature subsetting, the
stable value sort, sequential prefix sums, and first-maximum tie-breaking.
Given the same inputs and seed, both backends grow bit-identical trees.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_XORSHIFT_MULT = 2685821657736338717
_DEFAULT_STATE = 0x9E3779B97F4A7C15


def _rand_below(state: int, n: int) -> tuple[int, int]:
    """Advance xorshift64* once; return (new_state, uniform draw below n)."""
    x = state
    x ^= x >> 12
    x = (x ^ (x << 25)) & _MASK64
    x ^= x >> 27
    out = (x * _XORSHIFT_MULT) & _MASK64
    return x, (out * n) >> 64


def _draw_features(state: int, p: int, k: int) -> tuple[int, list[int]]:
    """Partial Fisher-Yates: k distinct feature indices, in drawn order."""
    arr = list(range(p))
    for i in range(k):
        state, r = _rand_below(state, p - i)
        j = i + r
        arr[i], arr[j] = arr[j], arr[i]
    return state, arr[:k]


def build_tree(X, y, sample_idx, max_depth: int, min_leaf: int, max_features: int, seed: int):
    """Grow one regression tree over the given sample rows.

    Returns (feature, threshold, left, right, value) arrays; leaves have
    feature == -1. max_depth < 0 means unlimited.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    idx = np.asarray(sample_idx, dtype=np.int64).copy()
    p = X.shape[1]
    k = p if max_features <= 0 else min(max_features, p)
    if max_depth < 0:
        max_depth = 2**31 - 1
    state = (seed & _MASK64) or _DEFAULT_STATE

    feature, threshold, left, right, value = [], [], [], [], []

    def new_node():
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        return len(feature) - 1

    root = new_node()
    stack = [(root, 0, len(idx), 0)]
    while stack:
        node, start, end, depth = stack.pop()
        seg = idx[start:end]
        n_node = end - start
        ys = y[seg]
        total = float(np.cumsum(ys)[-1])  # sequential sum, matches the C loop
        value[node] = total / n_node

        if depth >= max_depth or n_node < 2 or n_node < 2 * min_leaf:
            continue

        state, feats = _draw_features(state, p, k)
        best_score = -np.inf
        best_feat = -1
        best_thr = 0.0
        for f in feats:
            xs = X[seg, f]
            order = np.argsort(xs, kind="stable")
            xs_sorted = xs[order]
            cum = np.cumsum(ys[order])
            tot = float(cum[-1])
            lo, hi = min_leaf - 1, n_node - min_leaf  # split positions [lo, hi)
            if hi <= lo:
                continue
            pos = np.arange(lo, hi)
            valid = xs_sorted[pos + 1] > xs_sorted[pos]
            if not valid.any():
                continue
            n_l = (pos + 1).astype(np.float64)
            s_l = cum[pos]
            s_r = tot - s_l
            score = s_l * s_l / n_l + s_r * s_r / (n_node - n_l)
            score = np.where(valid, score, -np.inf)
            b = int(np.argmax(score))  # first maximum
            if score[b] > best_score:
                best_score = float(score[b])
                best_feat = f
                best_thr = (xs_sorted[pos[b]] + xs_sorted[pos[b] + 1]) / 2.0
        if best_feat < 0:
            continue

        xs = X[seg, best_feat]
        go_left = xs <= best_thr
        idx[start:end] = np.concatenate([seg[go_left], seg[~go_left]])
        mid = start + int(go_left.sum())

        feature[node] = best_feat
        threshold[node] = best_thr
        l_id = new_node()
        r_id = new_node()
        left[node] = l_id
        right[node] = r_id
        stack.append((r_id, mid, end, depth + 1))
        stack.append((l_id, start, mid, depth + 1))

    return (
        np.array(feature, dtype=np.int32),
        np.array(threshold, dtype=np.float64),
        np.array(left, dtype=np.int32),
        np.array(right, dtype=np.int32),
        np.array(value, dtype=np.float64),
    )

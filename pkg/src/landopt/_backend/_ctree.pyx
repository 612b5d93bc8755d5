# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled regression-tree kernel.

Bit-for-bit twin of ``_pytree.build_tree``: same xorshift64* feature
subsetting, same stable (value, position) sort, same sequential prefix sums,
and the same first-maximum tie-breaking, so both backends grow identical
trees for identical inputs.
"""

from libc.stdint cimport int32_t, int64_t, uint64_t
from libcpp.algorithm cimport sort
from libcpp.pair cimport pair
from libcpp.vector cimport vector

import numpy as np

cimport numpy as cnp

cnp.import_array()

cdef extern from *:
    """
    #include <stdint.h>
    static inline uint64_t landopt_mulhi64(uint64_t a, uint64_t b) {
        return (uint64_t)(((__uint128_t)a * (__uint128_t)b) >> 64);
    }
    """
    uint64_t landopt_mulhi64(uint64_t a, uint64_t b) nogil

cdef uint64_t XORSHIFT_MULT = <uint64_t>2685821657736338717
cdef uint64_t DEFAULT_STATE = <uint64_t>0x9E3779B97F4A7C15

ctypedef pair[double, int32_t] dpair


cdef inline uint64_t _rand_below(uint64_t* state, uint64_t n) nogil:
    cdef uint64_t x = state[0]
    x ^= x >> 12
    x ^= x << 25
    x ^= x >> 27
    state[0] = x
    return landopt_mulhi64(x * XORSHIFT_MULT, n)


cdef void _draw_features(uint64_t* state, int p, int k, vector[int32_t]& arr,
                         vector[int32_t]& out) nogil:
    cdef int i, j
    cdef int32_t tmp
    arr.clear()
    for i in range(p):
        arr.push_back(i)
    out.clear()
    for i in range(k):
        j = i + <int>_rand_below(state, <uint64_t>(p - i))
        tmp = arr[i]
        arr[i] = arr[j]
        arr[j] = tmp
        out.push_back(arr[i])


def build_tree(X, y, sample_idx, int max_depth, int min_leaf, int max_features,
               unsigned long long seed):
    """Grow one regression tree; see the python twin for the contract."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] Xc = np.ascontiguousarray(X, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] yc = np.ascontiguousarray(y, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] idx = np.asarray(sample_idx, dtype=np.int64).copy()

    cdef int n = idx.shape[0]
    cdef int p = Xc.shape[1]
    cdef int k = p if max_features <= 0 else min(max_features, p)
    if max_depth < 0:
        max_depth = 2147483647
    cdef uint64_t state = seed if seed != 0 else DEFAULT_STATE

    cdef vector[int32_t] feature
    cdef vector[double] threshold
    cdef vector[int32_t] left
    cdef vector[int32_t] right
    cdef vector[double] value

    # stack entries: node, start, end, depth
    cdef vector[int64_t] stack

    cdef vector[int32_t] feat_pool, feats
    cdef vector[dpair] pairs
    cdef vector[double] cum
    cdef vector[double] xs_sorted
    cdef vector[int64_t] buf

    cdef int node, start, end, depth, n_node, fi, f, i, lo, hi, pos, mid
    cdef int l_id, r_id, best_feat
    cdef double total, tot, s_l, s_r, n_l, score, best_score, best_thr, xv
    cdef int64_t row

    feature.push_back(-1); threshold.push_back(0.0)
    left.push_back(-1); right.push_back(-1); value.push_back(0.0)
    stack.push_back(0); stack.push_back(0); stack.push_back(n); stack.push_back(0)

    while stack.size() > 0:
        depth = <int>stack.back(); stack.pop_back()
        end = <int>stack.back(); stack.pop_back()
        start = <int>stack.back(); stack.pop_back()
        node = <int>stack.back(); stack.pop_back()
        n_node = end - start

        total = 0.0
        for i in range(start, end):
            total += yc[idx[i]]
        value[node] = total / n_node

        if depth >= max_depth or n_node < 2 or n_node < 2 * min_leaf:
            continue

        _draw_features(&state, p, k, feat_pool, feats)
        best_score = -np.inf
        best_feat = -1
        best_thr = 0.0
        lo = min_leaf - 1
        hi = n_node - min_leaf
        for fi in range(k):
            f = feats[fi]
            pairs.clear()
            for i in range(n_node):
                row = idx[start + i]
                pairs.push_back(dpair(Xc[row, f], <int32_t>i))
            sort(pairs.begin(), pairs.end())
            xs_sorted.clear()
            cum.clear()
            tot = 0.0
            for i in range(n_node):
                xs_sorted.push_back(pairs[i].first)
                tot += yc[idx[start + pairs[i].second]]
                cum.push_back(tot)
            for pos in range(lo, hi):
                if xs_sorted[pos + 1] > xs_sorted[pos]:
                    n_l = <double>(pos + 1)
                    s_l = cum[pos]
                    s_r = tot - s_l
                    score = s_l * s_l / n_l + s_r * s_r / (n_node - n_l)
                    if score > best_score:
                        best_score = score
                        best_feat = f
                        best_thr = (xs_sorted[pos] + xs_sorted[pos + 1]) / 2.0
        if best_feat < 0:
            continue

        # stable partition of the segment by x <= threshold
        buf.clear()
        mid = start
        for i in range(start, end):
            if Xc[idx[i], best_feat] <= best_thr:
                mid += 1
        for i in range(start, end):
            if Xc[idx[i], best_feat] <= best_thr:
                buf.push_back(idx[i])
        for i in range(start, end):
            if not (Xc[idx[i], best_feat] <= best_thr):
                buf.push_back(idx[i])
        for i in range(n_node):
            idx[start + i] = buf[i]

        feature[node] = best_feat
        threshold[node] = best_thr
        l_id = <int>feature.size()
        feature.push_back(-1); threshold.push_back(0.0)
        left.push_back(-1); right.push_back(-1); value.push_back(0.0)
        r_id = <int>feature.size()
        feature.push_back(-1); threshold.push_back(0.0)
        left.push_back(-1); right.push_back(-1); value.push_back(0.0)
        left[node] = l_id
        right[node] = r_id
        stack.push_back(r_id); stack.push_back(mid); stack.push_back(end); stack.push_back(depth + 1)
        stack.push_back(l_id); stack.push_back(start); stack.push_back(mid); stack.push_back(depth + 1)

    cdef int n_nodes = <int>feature.size()
    feat_arr = np.empty(n_nodes, dtype=np.int32)
    thr_arr = np.empty(n_nodes, dtype=np.float64)
    left_arr = np.empty(n_nodes, dtype=np.int32)
    right_arr = np.empty(n_nodes, dtype=np.int32)
    val_arr = np.empty(n_nodes, dtype=np.float64)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] fa = feat_arr
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ta = thr_arr
    cdef cnp.ndarray[cnp.int32_t, ndim=1] la = left_arr
    cdef cnp.ndarray[cnp.int32_t, ndim=1] ra = right_arr
    cdef cnp.ndarray[cnp.float64_t, ndim=1] va = val_arr
    for i in range(n_nodes):
        fa[i] = feature[i]
        ta[i] = threshold[i]
        la[i] = left[i]
        ra[i] = right[i]
        va[i] = value[i]
    return feat_arr, thr_arr, left_arr, right_arr, val_arr

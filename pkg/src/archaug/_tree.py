"""Compiled kernels for regression-tree growth and traversal.

Features are bucketized before they reach these kernels: each column is
recoded as an index into its sorted unique values, so split search is a
counting pass per node instead of a sort. The kernels are deterministic:
feature subsets come from an explicit xorshift stream, value scans go in
ascending order, and score ties keep the first candidate, which is the
lowest feature index and lowest threshold.
"""

from __future__ import annotations

import numpy as np
from numba import njit

LEAF = np.int32(-1)
MAX_BUCKETS = 256

_MULT = np.uint64(2685821657736338717)


@njit(cache=True, nogil=True, inline="always")
def _xorshift(state):
    # xorshift64*; state must stay nonzero
    state ^= state >> np.uint64(12)
    state ^= state << np.uint64(25)
    state ^= state >> np.uint64(27)
    return state


@njit(cache=True, nogil=True)
def grow_tree(
    codes,
    uvals,
    uoff,
    y,
    idx,
    max_features,
    min_samples_split,
    max_depth,
    seed,
):
    """Grow one CART regression tree over the rows listed in idx.

    codes: (N, D) uint8 bucket codes; uvals/uoff: per-feature sorted unique
    values in CSR layout; idx is reordered in place by the partitions.
    Returns (feature, threshold, left, right, value, n_nodes).
    """
    n = idx.size
    d = codes.shape[1]
    cap = 2 * n + 1
    feature = np.full(cap, LEAF, dtype=np.int32)
    threshold = np.zeros(cap, dtype=np.float64)
    left = np.full(cap, LEAF, dtype=np.int32)
    right = np.full(cap, LEAF, dtype=np.int32)
    value = np.zeros(cap, dtype=np.float64)

    cnt = np.zeros(MAX_BUCKETS, dtype=np.int64)
    sm = np.zeros(MAX_BUCKETS, dtype=np.float64)
    touched = np.empty(MAX_BUCKETS, dtype=np.int64)
    perm = np.empty(d, dtype=np.int64)
    cand = np.empty(d, dtype=np.int64)

    state = np.uint64(2 * seed + 1)

    # stack rows: parent id, child slot (0 left, 1 right), lo, hi, depth
    stack = np.empty((2 * n + 2, 5), dtype=np.int64)
    stack[0] = (-1, 0, 0, n, 0)
    top = 1
    n_nodes = 0

    while top > 0:
        top -= 1
        parent, slot, lo, hi, depth = stack[top]
        node = n_nodes
        n_nodes += 1
        if parent >= 0:
            if slot == 0:
                left[parent] = node
            else:
                right[parent] = node

        m = hi - lo
        s_tot = 0.0
        mn = y[idx[lo]]
        mx = mn
        for k in range(lo, hi):
            v = y[idx[k]]
            s_tot += v
            if v < mn:
                mn = v
            if v > mx:
                mx = v

        if mn == mx:
            value[node] = mn  # pure leaf keeps the label bit-exact
            continue
        if m < min_samples_split or (max_depth >= 0 and depth >= max_depth):
            value[node] = s_tot / m
            continue

        n_cand = max_features if max_features < d else d
        if n_cand < d:
            for i in range(d):
                perm[i] = i
            for i in range(n_cand):
                state = _xorshift(state)
                j = i + np.int64((state * _MULT) % np.uint64(d - i))
                perm[i], perm[j] = perm[j], perm[i]
            for i in range(n_cand):
                cand[i] = perm[i]
            # ascending candidate order keeps the tie-break by feature index
            for i in range(1, n_cand):
                key = cand[i]
                j = i - 1
                while j >= 0 and cand[j] > key:
                    cand[j + 1] = cand[j]
                    j -= 1
                cand[j + 1] = key
        else:
            for i in range(d):
                cand[i] = i

        best_score = -1.0
        best_f = -1
        best_code = -1
        best_thr = 0.0

        for ci in range(n_cand):
            f = cand[ci]
            n_t = 0
            for k in range(lo, hi):
                c = np.int64(codes[idx[k], f])
                if cnt[c] == 0:
                    touched[n_t] = c
                    n_t += 1
                cnt[c] += 1
                sm[c] += y[idx[k]]
            if n_t > 1:
                for i in range(1, n_t):
                    key = touched[i]
                    j = i - 1
                    while j >= 0 and touched[j] > key:
                        touched[j + 1] = touched[j]
                        j -= 1
                    touched[j + 1] = key
                n_l = np.int64(0)
                s_l = 0.0
                base = uoff[f]
                for i in range(n_t - 1):
                    c = touched[i]
                    n_l += cnt[c]
                    s_l += sm[c]
                    n_r = m - n_l
                    s_r = s_tot - s_l
                    score = s_l * s_l / n_l + s_r * s_r / n_r
                    if score > best_score:
                        lo_val = uvals[base + c]
                        hi_val = uvals[base + touched[i + 1]]
                        thr = 0.5 * (lo_val + hi_val)
                        if not thr < hi_val:
                            # adjacent representable floats: fall back to the
                            # lower value so the walk rule matches the split
                            thr = lo_val
                        best_score = score
                        best_f = f
                        best_code = c
                        best_thr = thr
            for i in range(n_t):
                c = touched[i]
                cnt[c] = 0
                sm[c] = 0.0

        if best_f < 0:
            # every candidate column is constant here; nothing to split on
            value[node] = s_tot / m
            continue

        i = lo
        j = hi - 1
        while i <= j:
            if codes[idx[i], best_f] <= best_code:
                i += 1
            else:
                idx[i], idx[j] = idx[j], idx[i]
                j -= 1

        feature[node] = best_f
        threshold[node] = best_thr
        stack[top] = (node, 1, i, hi, depth + 1)
        stack[top + 1] = (node, 0, lo, i, depth + 1)
        top += 2

    return (
        feature[:n_nodes],
        threshold[:n_nodes],
        left[:n_nodes],
        right[:n_nodes],
        value[:n_nodes],
        n_nodes,
    )


@njit(cache=True, nogil=True)
def predict_tree(feature, threshold, left, right, value, x_mat, out):
    for r in range(x_mat.shape[0]):
        node = 0
        while feature[node] >= 0:
            if x_mat[r, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[r] = value[node]

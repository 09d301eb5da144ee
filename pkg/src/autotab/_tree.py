"""Flat-array CART kernels, numba-jitted.

One growth kernel serves both classification trees (gini on 0/1 targets,
leaf = positive proportion) and gradient-boosting regression trees
(variance on residuals, Newton leaf = sum(grad)/sum(hess)). Trees are
stored as parallel arrays indexed by node id; feature == -1 marks a leaf.

Tie-breaking is deterministic: candidate features are scanned in
ascending index order and thresholds ascending, and a split must be
strictly better than the incumbent to replace it.
"""

from __future__ import annotations

import numpy as np
from numba import njit

CRIT_GINI = 0
CRIT_VARIANCE = 1

_U64_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)


@njit(cache=True, inline="always")
def _xorshift(state):
    state ^= (state << np.uint64(13)) & _U64_MASK
    state ^= state >> np.uint64(7)
    state ^= (state << np.uint64(17)) & _U64_MASK
    return state


@njit(cache=True)
def grow_tree(X, num, den, sample_idx, criterion, max_depth, min_leaf,
              min_gain, mtry, seed):
    """Grow one CART tree on X[sample_idx].

    Returns (feature, threshold, left, right, value, n_nodes, imp_gain)
    where imp_gain accumulates size-weighted impurity decrease per
    feature (the raw material for variable importance).
    """
    m_total = len(sample_idx)
    p = X.shape[1]
    max_nodes = 2 * m_total + 1
    feature = np.full(max_nodes, -1, dtype=np.int32)
    threshold = np.zeros(max_nodes)
    left = np.full(max_nodes, -1, dtype=np.int32)
    right = np.full(max_nodes, -1, dtype=np.int32)
    value = np.zeros(max_nodes)
    imp_gain = np.zeros(p)

    idx = sample_idx.copy()
    buf = np.empty(m_total, dtype=idx.dtype)
    feat_pool = np.empty(p, dtype=np.int64)
    rng_state = (np.uint64(seed) * np.uint64(2654435761) + np.uint64(1)) & _U64_MASK

    # stack of (start, end, depth, node_id)
    stack = np.empty((max_nodes, 4), dtype=np.int64)
    stack[0, 0] = 0
    stack[0, 1] = m_total
    stack[0, 2] = 0
    stack[0, 3] = 0
    top = 1
    n_nodes = 1

    while top > 0:
        top -= 1
        start, end, depth, node = stack[top]
        m = end - start

        s_num = 0.0
        s_den = 0.0
        s_sq = 0.0
        for i in range(start, end):
            v = num[idx[i]]
            s_num += v
            s_sq += v * v
            s_den += den[idx[i]]
        if criterion == CRIT_GINI:
            value[node] = s_num / m
        else:
            d = s_den
            if d < 1e-12:
                d = 1e-12
            value[node] = s_num / d

        if depth >= max_depth or m < 2 * min_leaf:
            continue
        if criterion == CRIT_GINI:
            mean = s_num / m
            parent_imp = 1.0 - mean * mean - (1.0 - mean) * (1.0 - mean)
        else:
            mean = s_num / m
            parent_imp = s_sq / m - mean * mean
        if parent_imp <= 1e-15:
            continue

        # draw the candidate feature set (ascending order for ties)
        if mtry >= p:
            n_feats = p
            for j in range(p):
                feat_pool[j] = j
        else:
            n_feats = mtry
            for j in range(p):
                feat_pool[j] = j
            for j in range(mtry):
                rng_state = _xorshift(rng_state)
                k = j + np.int64(rng_state % np.uint64(p - j))
                tmp = feat_pool[j]
                feat_pool[j] = feat_pool[k]
                feat_pool[k] = tmp
            feat_pool[:mtry] = np.sort(feat_pool[:mtry])

        best_gain = -1.0
        best_feat = -1
        best_thr = 0.0
        for jj in range(n_feats):
            f = feat_pool[jj]
            col = np.empty(m)
            for i in range(m):
                col[i] = X[idx[start + i], f]
            order = np.argsort(col, kind="mergesort")
            # prefix scan over sorted rows
            cn = 0.0
            csq = 0.0
            for i in range(m - 1):
                row = idx[start + order[i]]
                v = num[row]
                cn += v
                csq += v * v
                vi = col[order[i]]
                vnext = col[order[i + 1]]
                if vi == vnext:
                    continue
                nl = i + 1
                nr = m - nl
                if nl < min_leaf or nr < min_leaf:
                    continue
                if criterion == CRIT_GINI:
                    pl = cn / nl
                    pr = (s_num - cn) / nr
                    imp_l = 1.0 - pl * pl - (1.0 - pl) * (1.0 - pl)
                    imp_r = 1.0 - pr * pr - (1.0 - pr) * (1.0 - pr)
                else:
                    ml = cn / nl
                    mr = (s_num - cn) / nr
                    imp_l = csq / nl - ml * ml
                    imp_r = (s_sq - csq) / nr - mr * mr
                gain = parent_imp - (nl * imp_l + nr * imp_r) / m
                if gain > best_gain:
                    best_gain = gain
                    best_feat = f
                    # midpoint can round up to vnext for adjacent floats;
                    # fall back to vi so the split always separates
                    thr = 0.5 * (vi + vnext)
                    if thr >= vnext:
                        thr = vi
                    best_thr = thr

        if best_feat < 0 or best_gain < min_gain:
            continue

        # stable partition: rows with x <= threshold go left
        nl = 0
        for i in range(start, end):
            if X[idx[i], best_feat] <= best_thr:
                buf[nl] = idx[i]
                nl += 1
        nr = 0
        for i in range(start, end):
            if X[idx[i], best_feat] > best_thr:
                buf[nl + nr] = idx[i]
                nr += 1
        if nl == 0 or nr == 0:  # degenerate split; keep the node a leaf
            continue
        idx[start:end] = buf[:m]

        feature[node] = best_feat
        threshold[node] = best_thr
        imp_gain[best_feat] += best_gain * m
        lid = n_nodes
        rid = n_nodes + 1
        n_nodes += 2
        left[node] = lid
        right[node] = rid
        stack[top, 0] = start
        stack[top, 1] = start + nl
        stack[top, 2] = depth + 1
        stack[top, 3] = lid
        top += 1
        stack[top, 0] = start + nl
        stack[top, 1] = end
        stack[top, 2] = depth + 1
        stack[top, 3] = rid
        top += 1

    return (feature[:n_nodes], threshold[:n_nodes], left[:n_nodes],
            right[:n_nodes], value[:n_nodes], n_nodes, imp_gain)


@njit(cache=True)
def predict_tree(X, feature, threshold, left, right, value):
    n = X.shape[0]
    out = np.empty(n)
    for i in range(n):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = value[node]
    return out

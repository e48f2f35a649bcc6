"""Compiled kernels for growing and traversing weighted decision trees.

Trees are grown iteratively with an explicit stack, to purity or
single-sample nodes, using weighted Gini improvement.  Per-node feature
subsets come from a splitmix64 stream seeded per tree, so growth is fully
deterministic for a given seed regardless of compilation or call order.
All node arrays are flat and preallocated; a tree over ``b`` bootstrap
rows needs at most ``2 * b`` node slots.
"""

import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


@njit(nogil=True, cache=True, inline="always")
def _rand_u64(state):
    state[0] = state[0] + _GOLDEN
    z = state[0]
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


@njit(nogil=True, cache=True, inline="always")
def _rand_below(state, n):
    # top 63 bits keep the signed conversion safe; modulo bias is
    # negligible for feature counts
    return np.int64(_rand_u64(state) >> np.uint64(1)) % n


@njit(nogil=True, cache=True)
def grow_tree(x, y, w, boot, mtry, seed_word, feature, threshold, left, right, leaf):
    """Grow one tree on the bootstrap rows ``boot``; returns node count
    and the per-feature impurity-decrease totals."""
    nb = boot.shape[0]
    d = x.shape[1]
    gain = np.zeros(d)
    idx = boot.copy()
    tmp = np.empty(nb, dtype=np.int64)
    vbuf = np.empty(nb, dtype=np.float64)
    perm = np.empty(d, dtype=np.int64)
    for i in range(d):
        perm[i] = i
    state = np.empty(1, dtype=np.uint64)
    state[0] = seed_word

    cap = feature.shape[0]
    stack_node = np.empty(cap, dtype=np.int64)
    stack_lo = np.empty(cap, dtype=np.int64)
    stack_hi = np.empty(cap, dtype=np.int64)
    top = 0
    stack_node[0] = 0
    stack_lo[0] = 0
    stack_hi[0] = nb
    top = 1
    n_nodes = 1

    while top > 0:
        top -= 1
        nid = stack_node[top]
        lo = stack_lo[top]
        hi = stack_hi[top]
        size = hi - lo

        wp = 0.0
        wn = 0.0
        for i in range(lo, hi):
            r = idx[i]
            if y[r] == 1:
                wp += w[r]
            else:
                wn += w[r]

        if size == 1 or wp == 0.0 or wn == 0.0:
            feature[nid] = -1
            threshold[nid] = 0.0
            left[nid] = -1
            right[nid] = -1
            leaf[nid] = 1 if wp > wn else 0
            continue

        # partial Fisher-Yates: the first mtry slots become the candidates
        for i in range(mtry):
            j = i + _rand_below(state, d - i)
            t = perm[i]
            perm[i] = perm[j]
            perm[j] = t

        best_proxy = -1.0e308
        best_feat = np.int64(-1)
        best_thr = 0.0
        for ci in range(mtry):
            f = perm[ci]
            for i in range(size):
                vbuf[i] = x[idx[lo + i], f]
            order = np.argsort(vbuf[:size])
            wpl = 0.0
            wnl = 0.0
            for i in range(size - 1):
                r = idx[lo + order[i]]
                if y[r] == 1:
                    wpl += w[r]
                else:
                    wnl += w[r]
                v_i = vbuf[order[i]]
                v_n = vbuf[order[i + 1]]
                if v_n > v_i:
                    wpr = wp - wpl
                    wnr = wn - wnl
                    wl = wpl + wnl
                    wr = wpr + wnr
                    proxy = (wpl * wpl + wnl * wnl) / wl + (wpr * wpr + wnr * wnr) / wr
                    if proxy > best_proxy:
                        mid = 0.5 * (v_i + v_n)
                        if mid == v_n:
                            mid = v_i
                        best_proxy = proxy
                        best_feat = f
                        best_thr = mid

        if best_feat < 0:
            # impure node whose candidate features are all constant
            feature[nid] = -1
            threshold[nid] = 0.0
            left[nid] = -1
            right[nid] = -1
            leaf[nid] = 1 if wp > wn else 0
            continue

        parent_metric = (wp * wp + wn * wn) / (wp + wn)
        gain[best_feat] += best_proxy - parent_metric

        # stable two-pass partition keeps row order deterministic
        c = 0
        for i in range(lo, hi):
            if x[idx[i], best_feat] <= best_thr:
                tmp[c] = idx[i]
                c += 1
        c2 = c
        for i in range(lo, hi):
            if x[idx[i], best_feat] > best_thr:
                tmp[c2] = idx[i]
                c2 += 1
        for i in range(size):
            idx[lo + i] = tmp[i]
        mid_pos = lo + c

        lid = n_nodes
        rid = n_nodes + 1
        n_nodes += 2
        feature[nid] = best_feat
        threshold[nid] = best_thr
        left[nid] = lid
        right[nid] = rid
        leaf[nid] = 0

        stack_node[top] = lid
        stack_lo[top] = lo
        stack_hi[top] = mid_pos
        top += 1
        stack_node[top] = rid
        stack_lo[top] = mid_pos
        stack_hi[top] = hi
        top += 1

    return n_nodes, gain


@njit(nogil=True, cache=True)
def count_votes(xq, feature, threshold, left, right, leaf, tree_off, out_pos):
    """Positive-vote count per query row across all trees."""
    nq = xq.shape[0]
    n_trees = tree_off.shape[0] - 1
    for i in range(nq):
        votes = 0
        for t in range(n_trees):
            base = tree_off[t]
            node = np.int64(0)
            while feature[base + node] >= 0:
                if xq[i, feature[base + node]] <= threshold[base + node]:
                    node = left[base + node]
                else:
                    node = right[base + node]
            votes += leaf[base + node]
        out_pos[i] = votes

"""Compiled kernel for growing one extremely randomized tree.

Randomness is supplied by the caller as a (max_nodes, d + n_try) matrix of
uniforms drawn from the seeded numpy stream, one row per split attempt:
the first ``d`` entries order the features, the rest place thresholds.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def grow(x, y, max_depth, min_leaf, n_try, rand):
    n, d = x.shape
    cap = 2 * n + 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros(cap)

    idx = np.arange(n)
    st_node = np.empty(cap, dtype=np.int64)
    st_lo = np.empty(cap, dtype=np.int64)
    st_hi = np.empty(cap, dtype=np.int64)
    st_depth = np.empty(cap, dtype=np.int64)

    total_pos = 0.0
    for i in range(n):
        total_pos += y[i]
    value[0] = total_pos / n
    n_nodes = 1
    top = 0
    st_node[0] = 0
    st_lo[0] = 0
    st_hi[0] = n
    st_depth[0] = 0
    top = 1
    attempt = 0

    cand = np.empty(n_try, dtype=np.int64)
    c_thr = np.empty(n_try)

    while top > 0:
        top -= 1
        node = st_node[top]
        lo = st_lo[top]
        hi = st_hi[top]
        depth = st_depth[top]
        m = hi - lo
        pos = 0.0
        for t in range(lo, hi):
            pos += y[idx[t]]
        if depth >= max_depth or m < 2 * min_leaf or pos == 0.0 or pos == m:
            continue
        if attempt >= rand.shape[0]:
            continue
        r = attempt
        attempt += 1
        order = np.argsort(rand[r, :d])
        n_c = 0
        for jj in range(d):
            j = order[jj]
            mn = x[idx[lo], j]
            mx = mn
            for t in range(lo + 1, hi):
                v = x[idx[t], j]
                if v < mn:
                    mn = v
                if v > mx:
                    mx = v
            if mx > mn:
                cand[n_c] = j
                c_thr[n_c] = mn + rand[r, d + n_c] * (mx - mn)
                n_c += 1
                if n_c == n_try:
                    break
        if n_c == 0:
            continue
        best = -1
        best_imp = np.inf
        for c in range(n_c):
            j = cand[c]
            thr = c_thr[c]
            nl = 0
            pl = 0.0
            for t in range(lo, hi):
                if x[idx[t], j] < thr:
                    nl += 1
                    pl += y[idx[t]]
            nr = m - nl
            if nl < min_leaf or nr < min_leaf:
                continue
            pr = pos - pl
            imp = nl - (pl * pl + (nl - pl) * (nl - pl)) / nl + nr - (pr * pr + (nr - pr) * (nr - pr)) / nr
            if imp < best_imp:
                best_imp = imp
                best = c
        if best < 0:
            continue
        j = cand[best]
        thr = c_thr[best]
        # partition idx[lo:hi] so rows going left come first, preserving order
        buf_l = np.empty(m, dtype=np.int64)
        buf_r = np.empty(m, dtype=np.int64)
        nl = 0
        nr = 0
        pl = 0.0
        for t in range(lo, hi):
            i = idx[t]
            if x[i, j] < thr:
                buf_l[nl] = i
                nl += 1
                pl += y[i]
            else:
                buf_r[nr] = i
                nr += 1
        for t in range(nl):
            idx[lo + t] = buf_l[t]
        for t in range(nr):
            idx[lo + nl + t] = buf_r[t]
        feature[node] = j
        threshold[node] = thr
        ln = n_nodes
        rn = n_nodes + 1
        n_nodes += 2
        left[node] = ln
        right[node] = rn
        value[ln] = pl / nl
        value[rn] = (pos - pl) / nr
        st_node[top] = rn
        st_lo[top] = lo + nl
        st_hi[top] = hi
        st_depth[top] = depth + 1
        top += 1
        st_node[top] = ln
        st_lo[top] = lo
        st_hi[top] = lo + nl
        st_depth[top] = depth + 1
        top += 1
    return feature[:n_nodes], threshold[:n_nodes], left[:n_nodes], right[:n_nodes], value[:n_nodes]

# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled tree kernel: operation-for-operation twin of pytree.py.

Accumulation order, comparison rules and tie-breaking are identical to the
pure-Python kernel, so both backends grow bit-identical trees. Do not
"optimize" float expressions here without mirroring pytree.py.
"""

import numpy as np

cimport numpy as cnp

BACKEND_NAME = "c"


cdef void _stable_sort_by_value(int* idx, int* tmp, double* key, int n) noexcept:
    # bottom-up merge sort; takes from the left run on ties => stable
    cdef int width = 1
    cdef int lo, mid, hi, a, b, t, k
    cdef int* src = idx
    cdef int* dst = tmp
    cdef int* swap
    while width < n:
        lo = 0
        while lo < n:
            mid = lo + width
            if mid > n:
                mid = n
            hi = lo + 2 * width
            if hi > n:
                hi = n
            a = lo
            b = mid
            t = lo
            while a < mid and b < hi:
                if key[src[a]] <= key[src[b]]:
                    dst[t] = src[a]
                    a += 1
                else:
                    dst[t] = src[b]
                    b += 1
                t += 1
            while a < mid:
                dst[t] = src[a]
                a += 1
                t += 1
            while b < hi:
                dst[t] = src[b]
                b += 1
                t += 1
            lo = hi
        swap = src
        src = dst
        dst = swap
        width *= 2
    if src != idx:
        for k in range(n):
            idx[k] = src[k]


def grow_tree(int n_rows, int n_cols, col_ptr_in, col_row_in, col_val_in,
              grad_in, hess_in, int max_depth, double lam, double gamma,
              double min_child_weight):
    """See pytree.grow_tree; same contract, same results, compiled."""
    cdef cnp.ndarray[cnp.int32_t, ndim=1] col_ptr = np.ascontiguousarray(col_ptr_in, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] col_row = np.ascontiguousarray(col_row_in, dtype=np.int32)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] col_val = np.ascontiguousarray(col_val_in, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] grad = np.ascontiguousarray(grad_in, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] hess = np.ascontiguousarray(hess_in, dtype=np.float64)

    cdef int max_nodes = (2 << max_depth) - 1 if max_depth >= 0 else 1
    if max_nodes < 1:
        max_nodes = 1
    cdef int max_frontier = (1 << max_depth) if max_depth >= 0 else 1

    cdef cnp.ndarray[cnp.int32_t, ndim=1] feat = np.full(max_nodes, -1, dtype=np.int32)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] thr = np.zeros(max_nodes, dtype=np.float64)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] left = np.full(max_nodes, -1, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] right = np.full(max_nodes, -1, dtype=np.int32)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] weight = np.zeros(max_nodes, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] node_g = np.zeros(max_nodes, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] node_h = np.zeros(max_nodes, dtype=np.float64)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] node_n = np.zeros(max_nodes, dtype=np.int32)

    cdef cnp.ndarray[cnp.int32_t, ndim=1] assign = np.zeros(n_rows, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] frontier = np.zeros(max_frontier, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] new_frontier = np.zeros(max_frontier, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] slot_of = np.full(max_nodes, -1, dtype=np.int32)

    cdef cnp.ndarray[cnp.float64_t, ndim=1] best_gain = np.zeros(max_frontier, dtype=np.float64)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] best_feat = np.zeros(max_frontier, dtype=np.int32)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] best_thr = np.zeros(max_frontier, dtype=np.float64)

    cdef int max_col = 0
    cdef int j, e
    for j in range(n_cols):
        e = col_ptr[j + 1] - col_ptr[j]
        if e > max_col:
            max_col = e

    # column gather buffers (entry order = CSC order) and slot-major copies
    cdef cnp.ndarray[cnp.float64_t, ndim=1] bval = np.zeros(max_col, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] bg = np.zeros(max_col, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] bh = np.zeros(max_col, dtype=np.float64)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] bslot = np.zeros(max_col, dtype=np.int32)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] sval = np.zeros(max_col, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] sg = np.zeros(max_col, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] sh = np.zeros(max_col, dtype=np.float64)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] scount = np.zeros(max_frontier, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] soffset = np.zeros(max_frontier + 1, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] sfill = np.zeros(max_frontier, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] sidx = np.zeros(max_col, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] stmp = np.zeros(max_col, dtype=np.int32)

    cdef int n_nodes = 1
    cdef int n_front = 1
    cdef int depth = 0
    cdef int i, k, s, nid, k2, m, nentries, pos, lid, rid, n_new, a
    cdef int acc_n, nl, nr, cz, tn, nlc, nrc
    cdef double g_root, h_root, tg, th, gnz, hnz, gz, hz
    cdef double acc_g, acc_h, last_v, v, gg, hh, gl, hl, gr, hr, cut, gain
    cdef double glc, hlc, grc, hrc

    g_root = 0.0
    h_root = 0.0
    for i in range(n_rows):
        g_root += grad[i]
        h_root += hess[i]
    node_g[0] = g_root
    node_h[0] = h_root
    node_n[0] = n_rows
    frontier[0] = 0

    while n_front > 0 and depth < max_depth:
        for s in range(n_front):
            slot_of[frontier[s]] = s
            best_gain[s] = 0.0
            best_feat[s] = -1
            best_thr[s] = 0.0

        for j in range(n_cols):
            nentries = 0
            for s in range(n_front):
                scount[s] = 0
            for k in range(col_ptr[j], col_ptr[j + 1]):
                i = col_row[k]
                s = slot_of[assign[i]]
                if s >= 0:
                    bval[nentries] = col_val[k]
                    bg[nentries] = grad[i]
                    bh[nentries] = hess[i]
                    bslot[nentries] = s
                    scount[s] += 1
                    nentries += 1
            if nentries == 0:
                continue
            soffset[0] = 0
            for s in range(n_front):
                soffset[s + 1] = soffset[s] + scount[s]
                sfill[s] = soffset[s]
            for k in range(nentries):
                s = bslot[k]
                pos = sfill[s]
                sval[pos] = bval[k]
                sg[pos] = bg[k]
                sh[pos] = bh[k]
                sfill[s] = pos + 1

            for s in range(n_front):
                m = scount[s]
                if m == 0:
                    continue
                pos = soffset[s]
                for k2 in range(m):
                    sidx[k2] = pos + k2
                _stable_sort_by_value(<int*> &sidx[0], <int*> &stmp[0], <double*> &sval[0], m)
                nid = frontier[s]
                tg = node_g[nid]
                th = node_h[nid]
                tn = node_n[nid]
                gnz = 0.0
                hnz = 0.0
                for k2 in range(m):
                    gnz += sg[sidx[k2]]
                    hnz += sh[sidx[k2]]
                gz = tg - gnz
                hz = th - hnz
                cz = tn - m

                acc_g = 0.0
                acc_h = 0.0
                acc_n = 0
                last_v = 0.0
                for k2 in range(m):
                    v = sval[sidx[k2]]
                    gg = sg[sidx[k2]]
                    hh = sh[sidx[k2]]
                    if k2 == 0 or v != sval[sidx[k2 - 1]]:
                        gl = gz + acc_g
                        hl = hz + acc_h
                        nl = cz + acc_n
                        gr = tg - gl
                        hr = th - hl
                        nr = tn - nl
                        if nl > 0 and nr > 0 and hl >= min_child_weight and hr >= min_child_weight:
                            cut = (last_v + v) * 0.5
                            gain = 0.5 * (gl * gl / (hl + lam)
                                          + gr * gr / (hr + lam)
                                          - (gl + gr) * (gl + gr) / (hl + hr + lam)) - gamma
                            if gain > best_gain[s]:
                                best_gain[s] = gain
                                best_feat[s] = j
                                best_thr[s] = cut
                    acc_g += gg
                    acc_h += hh
                    acc_n += 1
                    last_v = v

        n_new = 0
        for s in range(n_front):
            nid = frontier[s]
            if best_gain[s] > 0.0 and best_feat[s] >= 0:
                j = best_feat[s]
                cut = best_thr[s]
                lid = n_nodes
                rid = n_nodes + 1
                n_nodes += 2
                feat[nid] = j
                thr[nid] = cut
                left[nid] = lid
                right[nid] = rid
                for k in range(col_ptr[j], col_ptr[j + 1]):
                    i = col_row[k]
                    if assign[i] == nid and col_val[k] >= cut:
                        assign[i] = rid
                glc = 0.0
                hlc = 0.0
                nlc = 0
                grc = 0.0
                hrc = 0.0
                nrc = 0
                for i in range(n_rows):
                    a = assign[i]
                    if a == nid:
                        assign[i] = lid
                        glc += grad[i]
                        hlc += hess[i]
                        nlc += 1
                    elif a == rid:
                        grc += grad[i]
                        hrc += hess[i]
                        nrc += 1
                node_g[lid] = glc
                node_h[lid] = hlc
                node_n[lid] = nlc
                node_g[rid] = grc
                node_h[rid] = hrc
                node_n[rid] = nrc
                new_frontier[n_new] = lid
                new_frontier[n_new + 1] = rid
                n_new += 2
            else:
                weight[nid] = -node_g[nid] / (node_h[nid] + lam)
            slot_of[nid] = -1
        for s in range(n_new):
            frontier[s] = new_frontier[s]
        n_front = n_new
        depth += 1

    for s in range(n_front):
        nid = frontier[s]
        weight[nid] = -node_g[nid] / (node_h[nid] + lam)

    feat_out = [feat[k] for k in range(n_nodes)]
    thr_out = [thr[k] for k in range(n_nodes)]
    left_out = [left[k] for k in range(n_nodes)]
    right_out = [right[k] for k in range(n_nodes)]
    weight_out = [weight[k] for k in range(n_nodes)]
    row_weight = [weight[assign[i]] for i in range(n_rows)]
    return feat_out, thr_out, left_out, right_out, weight_out, row_weight


def prepare_forest(feat, thr, left, right, weight, roots):
    """Pack flattened forest arrays into this backend's routing format."""
    return (
        np.ascontiguousarray(feat, dtype=np.int32),
        np.ascontiguousarray(thr, dtype=np.float64),
        np.ascontiguousarray(left, dtype=np.int32),
        np.ascontiguousarray(right, dtype=np.int32),
        np.ascontiguousarray(weight, dtype=np.float64),
        np.ascontiguousarray(roots, dtype=np.int32),
    )


def predict_margin(forest, double base, double lr, cols, vals):
    """Route one sparse row through every tree; returns the raw margin."""
    cdef cnp.ndarray[cnp.int32_t, ndim=1] feat = forest[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] thr = forest[1]
    cdef cnp.ndarray[cnp.int32_t, ndim=1] left = forest[2]
    cdef cnp.ndarray[cnp.int32_t, ndim=1] right = forest[3]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] weight = forest[4]
    cdef cnp.ndarray[cnp.int32_t, ndim=1] roots = forest[5]
    cdef cnp.ndarray[cnp.int32_t, ndim=1] ccols = np.ascontiguousarray(cols, dtype=np.int32)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cvals = np.ascontiguousarray(vals, dtype=np.float64)

    cdef double margin = base
    cdef int n_nz = ccols.shape[0]
    cdef int r, nid, f, lo, hi, mid
    cdef double v
    for r in range(roots.shape[0]):
        nid = roots[r]
        while left[nid] != -1:
            f = feat[nid]
            v = 0.0
            lo = 0
            hi = n_nz
            while lo < hi:
                mid = (lo + hi) >> 1
                if ccols[mid] < f:
                    lo = mid + 1
                else:
                    hi = mid
            if lo < n_nz and ccols[lo] == f:
                v = cvals[lo]
            nid = left[nid] if v < thr[nid] else right[nid]
        margin += lr * weight[nid]
    return margin

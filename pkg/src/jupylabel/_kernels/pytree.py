"""Pure-Python tree kernel: the reference implementation.

The compiled kernel in _ctree.pyx is an operation-for-operation twin of this
module; float accumulation order is identical in both, so a model trained with
either backend is bit-for-bit the same artifact. Keep the two in sync.

Feature matrices arrive in CSC form (column pointers, row indices, values)
with strictly positive stored values; absent entries are zero and always
route to the left child.
"""

from __future__ import annotations

BACKEND_NAME = "python"


def grow_tree(n_rows, n_cols, col_ptr, col_row, col_val, grad, hess,
              max_depth, lam, gamma, min_child_weight):
    """Grow one regression tree by exact greedy second-order split search.

    Returns (feat, thr, left, right, weight, row_weight) as plain lists;
    internal nodes have left >= 0, leaves have left == right == -1.
    """
    col_ptr = list(col_ptr)
    col_row = list(col_row)
    col_val = list(col_val)
    grad = list(grad)
    hess = list(hess)

    feat = [-1]
    thr = [0.0]
    left = [-1]
    right = [-1]
    weight = [0.0]

    g_root = 0.0
    h_root = 0.0
    for i in range(n_rows):
        g_root += grad[i]
        h_root += hess[i]
    node_g = [g_root]
    node_h = [h_root]
    node_n = [n_rows]

    assign = [0] * n_rows
    frontier = [0]
    depth = 0

    while frontier and depth < max_depth:
        nslots = len(frontier)
        slot_of = {}
        for s, nid in enumerate(frontier):
            slot_of[nid] = s
        best_gain = [0.0] * nslots
        best_feat = [-1] * nslots
        best_thr = [0.0] * nslots

        for j in range(n_cols):
            buckets = [None] * nslots
            for k in range(col_ptr[j], col_ptr[j + 1]):
                i = col_row[k]
                s = slot_of.get(assign[i], -1)
                if s >= 0:
                    ent = buckets[s]
                    if ent is None:
                        ent = []
                        buckets[s] = ent
                    ent.append((col_val[k], grad[i], hess[i]))

            for s in range(nslots):
                ent = buckets[s]
                if not ent:
                    continue
                # stable by value: gather order (ascending row) breaks ties
                ent.sort(key=_entry_value)
                nid = frontier[s]
                tg = node_g[nid]
                th = node_h[nid]
                tn = node_n[nid]
                m = len(ent)
                gnz = 0.0
                hnz = 0.0
                for e in ent:
                    gnz += e[1]
                    hnz += e[2]
                gz = tg - gnz
                hz = th - hnz
                cz = tn - m

                acc_g = 0.0
                acc_h = 0.0
                acc_n = 0
                last_v = 0.0
                for k2 in range(m):
                    v, gg, hh = ent[k2]
                    if k2 == 0 or v != ent[k2 - 1][0]:
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

        new_frontier = []
        for s in range(nslots):
            nid = frontier[s]
            if best_gain[s] > 0.0 and best_feat[s] >= 0:
                j = best_feat[s]
                cut = best_thr[s]
                lid = len(feat)
                rid = lid + 1
                for _ in range(2):
                    feat.append(-1)
                    thr.append(0.0)
                    left.append(-1)
                    right.append(-1)
                    weight.append(0.0)
                    node_g.append(0.0)
                    node_h.append(0.0)
                    node_n.append(0)
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
                new_frontier.append(lid)
                new_frontier.append(rid)
            else:
                weight[nid] = -node_g[nid] / (node_h[nid] + lam)
        frontier = new_frontier
        depth += 1

    for nid in frontier:
        weight[nid] = -node_g[nid] / (node_h[nid] + lam)

    row_weight = [weight[assign[i]] for i in range(n_rows)]
    return feat, thr, left, right, weight, row_weight


def _entry_value(entry):
    return entry[0]


def prepare_forest(feat, thr, left, right, weight, roots):
    """Pack flattened forest arrays into this backend's routing format."""
    return (list(feat), list(thr), list(left), list(right), list(weight), list(roots))


def predict_margin(forest, base, lr, cols, vals):
    """Route one sparse row through every tree; returns the raw margin."""
    feat, thr, left, right, weight, roots = forest
    value_of = {}
    for idx in range(len(cols)):
        value_of[cols[idx]] = vals[idx]
    margin = base
    for r in range(len(roots)):
        nid = roots[r]
        while left[nid] != -1:
            v = value_of.get(feat[nid], 0.0)
            nid = left[nid] if v < thr[nid] else right[nid]
        margin += lr * weight[nid]
    return margin

"""Compiled inner loops: concordance pair counting and decision-tree split scans.

Mirrors `injurycast.kernels._ref`; the public wrappers in
`injurycast.kernels` pick one of the two at import time.
"""

from libc.math cimport INFINITY


def concordance_counts(double[::1] scores, long[::1] times, unsigned char[::1] events):
    """Count (concordant, score-tied, comparable) ordered pairs.

    A pair (i, j) is comparable when events[i] == 1 and times[i] < times[j];
    it is concordant when scores[i] > scores[j].
    """
    cdef Py_ssize_t n = scores.shape[0]
    cdef Py_ssize_t i, j
    cdef long long concordant = 0, tied = 0, comparable = 0
    for i in range(n):
        if events[i] == 0:
            continue
        for j in range(n):
            if times[j] > times[i]:
                comparable += 1
                if scores[i] > scores[j]:
                    concordant += 1
                elif scores[i] == scores[j]:
                    tied += 1
    return concordant, tied, comparable


def best_split_gini(double[::1] values, double[::1] labels, Py_ssize_t min_leaf):
    """Best binary split of a node by Gini impurity decrease.

    `values` must be sorted ascending with `labels` (0/1) reordered to match.
    Splits are only placed between strictly distinct values; both children
    must hold at least `min_leaf` rows. Returns (gain, threshold, n_left)
    where the left child is `x <= threshold`; gain is -inf when no valid
    split exists. Ties are broken toward the lowest threshold.
    """
    cdef Py_ssize_t n = values.shape[0]
    cdef Py_ssize_t i
    cdef double total_pos = 0.0
    for i in range(n):
        total_pos += labels[i]
    cdef double best_gain = -INFINITY, best_thr = 0.0
    cdef Py_ssize_t best_nl = 0
    if min_leaf < 1:
        min_leaf = 1
    if n < 2:
        return best_gain, best_thr, best_nl
    cdef double parent_p = total_pos / n
    cdef double parent_gini = 2.0 * parent_p * (1.0 - parent_p)
    cdef double pos_left = 0.0
    cdef double nl, nr, pl, pr, gl, gr, gain
    for i in range(n - 1):
        pos_left += labels[i]
        nl = i + 1
        nr = n - nl
        if nr < min_leaf:
            break
        if nl < min_leaf:
            continue
        if values[i] == values[i + 1]:
            continue
        pl = pos_left / nl
        pr = (total_pos - pos_left) / nr
        gl = 2.0 * pl * (1.0 - pl)
        gr = 2.0 * pr * (1.0 - pr)
        gain = parent_gini - (nl * gl + nr * gr) / n
        if gain > best_gain:
            best_gain = gain
            best_thr = values[i]
            best_nl = i + 1
    return best_gain, best_thr, best_nl


def best_split_gradhess(double[::1] values, double[::1] grad, double[::1] hess,
                        double lam, Py_ssize_t min_leaf):
    """Best binary split of a node by second-order (Newton) gain.

    Same ordering/placement contract as `best_split_gini`. Gain is
    0.5 * (GL^2/(HL+lam) + GR^2/(HR+lam) - G^2/(H+lam)).
    """
    cdef Py_ssize_t n = values.shape[0]
    cdef Py_ssize_t i
    cdef double g_total = 0.0, h_total = 0.0
    for i in range(n):
        g_total += grad[i]
        h_total += hess[i]
    cdef double best_gain = -INFINITY, best_thr = 0.0
    cdef Py_ssize_t best_nl = 0
    if min_leaf < 1:
        min_leaf = 1
    if n < 2:
        return best_gain, best_thr, best_nl
    cdef double parent_score = g_total * g_total / (h_total + lam)
    cdef double gl = 0.0, hl = 0.0
    cdef double gr, hr, gain
    cdef Py_ssize_t nl, nr
    for i in range(n - 1):
        gl += grad[i]
        hl += hess[i]
        nl = i + 1
        nr = n - nl
        if nr < min_leaf:
            break
        if nl < min_leaf:
            continue
        if values[i] == values[i + 1]:
            continue
        gr = g_total - gl
        hr = h_total - hl
        gain = 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent_score)
        if gain > best_gain:
            best_gain = gain
            best_thr = values[i]
            best_nl = nl
    return best_gain, best_thr, best_nl

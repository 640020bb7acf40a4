"""Pure-NumPy kernels, used when the compiled extension is unavailable.

Semantics match `_native.pyx` exactly: same validity rules, same
tie-breaking (first/lowest-threshold winner), same returned tuples.
"""

from __future__ import annotations

import numpy as np

_CHUNK = 256  # rows of the event side scored per broadcast block


def concordance_counts(scores, times, events):
    ev_idx = np.flatnonzero(events == 1)
    concordant = 0
    tied = 0
    comparable = 0
    for start in range(0, ev_idx.size, _CHUNK):
        idx = ev_idx[start : start + _CHUNK]
        later = times[np.newaxis, :] > times[idx][:, np.newaxis]
        si = scores[idx][:, np.newaxis]
        comparable += int(later.sum())
        concordant += int(((si > scores[np.newaxis, :]) & later).sum())
        tied += int(((si == scores[np.newaxis, :]) & later).sum())
    return concordant, tied, comparable


def best_split_gini(values, labels, min_leaf):
    n = values.shape[0]
    min_leaf = max(int(min_leaf), 1)
    if n < 2:
        return -np.inf, 0.0, 0
    pos = np.cumsum(labels)
    total_pos = pos[-1]
    nl = np.arange(1, n, dtype=np.float64)
    nr = n - nl
    valid = (values[:-1] != values[1:]) & (nl >= min_leaf) & (nr >= min_leaf)
    if not valid.any():
        return -np.inf, 0.0, 0
    pl = pos[:-1] / nl
    pr = (total_pos - pos[:-1]) / nr
    gl = 2.0 * pl * (1.0 - pl)
    gr = 2.0 * pr * (1.0 - pr)
    parent_p = total_pos / n
    parent_gini = 2.0 * parent_p * (1.0 - parent_p)
    gain = parent_gini - (nl * gl + nr * gr) / n
    gain[~valid] = -np.inf
    k = int(np.argmax(gain))  # first maximum == lowest threshold
    return float(gain[k]), float(values[k]), k + 1


def best_split_gradhess(values, grad, hess, lam, min_leaf):
    n = values.shape[0]
    min_leaf = max(int(min_leaf), 1)
    if n < 2:
        return -np.inf, 0.0, 0
    gl = np.cumsum(grad)
    hl = np.cumsum(hess)
    g_total = gl[-1]
    h_total = hl[-1]
    nl = np.arange(1, n)
    nr = n - nl
    valid = (values[:-1] != values[1:]) & (nl >= min_leaf) & (nr >= min_leaf)
    if not valid.any():
        return -np.inf, 0.0, 0
    gr = g_total - gl[:-1]
    hr = h_total - hl[:-1]
    parent_score = g_total * g_total / (h_total + lam)
    gain = 0.5 * (gl[:-1] ** 2 / (hl[:-1] + lam) + gr**2 / (hr + lam) - parent_score)
    gain[~valid] = -np.inf
    k = int(np.argmax(gain))
    return float(gain[k]), float(values[k]), k + 1

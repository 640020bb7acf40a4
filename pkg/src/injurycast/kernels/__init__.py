"""Hot-loop kernels with a compiled core and a NumPy fallback.

The compiled extension (`_native`, Cython) is preferred; when it is not
built, or when INJURYCAST_PURE_PYTHON=1 is set, the NumPy reference
implementation (`_ref`) is used instead. `BACKEND` records the choice.

The public wrappers normalise dtypes/contiguity so both backends see
identical inputs; see benchmarks/bench_kernels.py for a speed comparison.
"""

from __future__ import annotations

import os

import numpy as np

if os.environ.get("INJURYCAST_PURE_PYTHON", "") == "1":
    from . import _ref as _impl

    BACKEND = "python"
else:
    try:
        from . import _native as _impl  # type: ignore[attr-defined]

        BACKEND = "native"
    except ImportError:
        from . import _ref as _impl

        BACKEND = "python"

__all__ = ["BACKEND", "concordance_counts", "best_split_gini", "best_split_gradhess"]


def _f8(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.float64)


def concordance_counts(scores, times, events) -> tuple[int, int, int]:
    """(concordant, score-tied, comparable) ordered-pair counts.

    Comparable pairs are (i, j) with events[i] == 1 and times[i] < times[j];
    concordant means scores[i] > scores[j].
    """
    c, t, m = _impl.concordance_counts(
        _f8(scores),
        np.ascontiguousarray(times, dtype=np.int64),
        np.ascontiguousarray(events, dtype=np.uint8),
    )
    return int(c), int(t), int(m)


def best_split_gini(values, labels, min_leaf: int) -> tuple[float, float, int]:
    """Best Gini split of value-sorted rows; (gain, threshold, n_left).

    Gain is -inf when no split satisfies the distinct-value and min_leaf
    rules. The left child is `x <= threshold`.
    """
    gain, thr, nl = _impl.best_split_gini(_f8(values), _f8(labels), int(min_leaf))
    return float(gain), float(thr), int(nl)


def best_split_gradhess(values, grad, hess, lam: float, min_leaf: int) -> tuple[float, float, int]:
    """Best second-order (Newton) split of value-sorted rows."""
    gain, thr, nl = _impl.best_split_gradhess(
        _f8(values), _f8(grad), _f8(hess), float(lam), int(min_leaf)
    )
    return float(gain), float(thr), int(nl)

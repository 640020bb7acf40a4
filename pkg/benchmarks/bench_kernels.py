"""Times the compiled kernels against the NumPy fallback.

Usage: python benchmarks/bench_kernels.py [--repeats N]
Covers the three hot loops (concordance pair counting and the two split
scans) plus an end-to-end forest fit, which is where the split scan
dominates in practice.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from injurycast.kernels import _ref

try:
    from injurycast.kernels import _native
except ImportError:
    _native = None

from injurycast.baselines import RandomForestClassifier


def best_of(repeats, fn, *args):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def row(name, py_time, native_time):
    speedup = "" if native_time is None else f"{py_time / native_time:7.1f}x"
    native = "   (not built)" if native_time is None else f"{native_time * 1e3:10.2f} ms"
    print(f"{name:<34} {py_time * 1e3:10.2f} ms {native} {speedup}")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()
    rng = np.random.default_rng(0)

    print(f"{'kernel':<34} {'numpy fallback':>13} {'compiled':>13}  speedup")

    n = 4000
    scores = np.ascontiguousarray(rng.choice([0.1, 0.4, 0.4, 0.9], size=n))
    times = np.ascontiguousarray(rng.integers(1, 8, size=n), dtype=np.int64)
    events = np.ascontiguousarray(rng.integers(0, 2, size=n), dtype=np.uint8)
    py = best_of(args.repeats, _ref.concordance_counts, scores, times, events)
    nat = (
        best_of(args.repeats, _native.concordance_counts, scores, times, events)
        if _native
        else None
    )
    row(f"concordance_counts (n={n})", py, nat)

    m = 200_000
    values = np.sort(rng.normal(size=m))
    labels = rng.integers(0, 2, size=m).astype(np.float64)
    py = best_of(args.repeats, _ref.best_split_gini, values, labels, 2)
    nat = best_of(args.repeats, _native.best_split_gini, values, labels, 2) if _native else None
    row(f"best_split_gini (n={m})", py, nat)

    grad = rng.normal(size=m)
    hess = rng.random(m) + 0.1
    py = best_of(args.repeats, _ref.best_split_gradhess, values, grad, hess, 1.0, 2)
    nat = (
        best_of(args.repeats, _native.best_split_gradhess, values, grad, hess, 1.0, 2)
        if _native
        else None
    )
    row(f"best_split_gradhess (n={m})", py, nat)

    # end to end: forest fit (argsort + kernel scan per node, both backends)
    import injurycast.kernels as kernels

    X = rng.normal(size=(4000, 15))
    y = (X[:, 0] + 0.5 * rng.normal(size=4000) > 0).astype(np.float64)

    def fit_forest():
        RandomForestClassifier(n_trees=20, max_depth=8, seed=0).fit(X, y)

    saved = (kernels.best_split_gini, kernels.best_split_gradhess)
    kernels.best_split_gini = lambda v, l, ml: _ref.best_split_gini(
        np.ascontiguousarray(v, dtype=np.float64), np.ascontiguousarray(l, dtype=np.float64), ml
    )
    py = best_of(max(1, args.repeats // 2), fit_forest)
    nat = None
    if _native:
        kernels.best_split_gini = lambda v, l, ml: _native.best_split_gini(
            np.ascontiguousarray(v, dtype=np.float64), np.ascontiguousarray(l, dtype=np.float64), ml
        )
        nat = best_of(max(1, args.repeats // 2), fit_forest)
    kernels.best_split_gini, kernels.best_split_gradhess = saved
    row("random forest fit (4000x15, 20t)", py, nat)


if __name__ == "__main__":
    main()

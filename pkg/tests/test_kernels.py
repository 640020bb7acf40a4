"""Kernel backends against brute-force oracles, and parity between them."""

import numpy as np
import pytest

from injurycast import kernels
from injurycast.kernels import _ref

BACKENDS = [("python", _ref)]
try:
    from injurycast.kernels import _native

    BACKENDS.append(("native", _native))
except ImportError:
    pass


def brute_concordance(scores, times, events):
    c = t = m = 0
    n = len(scores)
    for i in range(n):
        if events[i] != 1:
            continue
        for j in range(n):
            if times[j] > times[i]:
                m += 1
                if scores[i] > scores[j]:
                    c += 1
                elif scores[i] == scores[j]:
                    t += 1
    return c, t, m


def brute_best_gini(values, labels, min_leaf):
    """Try every split position directly from the impurity definition."""
    n = len(values)

    def gini(ys):
        if len(ys) == 0:
            return 0.0
        p = sum(ys) / len(ys)
        return 2.0 * p * (1.0 - p)

    best = (-np.inf, 0.0, 0)
    parent = gini(labels)
    for i in range(n - 1):
        if values[i] == values[i + 1]:
            continue
        left, right = labels[: i + 1], labels[i + 1 :]
        if len(left) < min_leaf or len(right) < min_leaf:
            continue
        gain = parent - (len(left) * gini(left) + len(right) * gini(right)) / n
        if gain > best[0]:
            best = (gain, values[i], i + 1)
    return best


@pytest.mark.parametrize("name,impl", BACKENDS)
def test_concordance_matches_bruteforce(name, impl, rng):
    for _ in range(30):
        n = int(rng.integers(2, 40))
        scores = np.ascontiguousarray(rng.choice([0.1, 0.4, 0.4, 0.9], size=n))
        times = np.ascontiguousarray(rng.integers(1, 6, size=n), dtype=np.int64)
        events = np.ascontiguousarray(rng.integers(0, 2, size=n), dtype=np.uint8)
        got = impl.concordance_counts(scores, times, events)
        assert tuple(int(v) for v in got) == brute_concordance(scores, times, events)


@pytest.mark.parametrize("name,impl", BACKENDS)
def test_gini_split_matches_bruteforce(name, impl, rng):
    for _ in range(50):
        n = int(rng.integers(2, 50))
        min_leaf = int(rng.integers(1, 4))
        values = np.sort(rng.choice([0.0, 1.0, 2.0, 2.0, 3.0, 7.0], size=n))
        labels = rng.integers(0, 2, size=n).astype(np.float64)
        gain, thr, nl = impl.best_split_gini(values, labels, min_leaf)
        bgain, bthr, bnl = brute_best_gini(values, labels, min_leaf)
        if np.isinf(bgain):
            assert np.isinf(gain)
        else:
            assert gain == pytest.approx(bgain, abs=1e-12)
            assert (thr, nl) == (bthr, bnl)


@pytest.mark.parametrize("name,impl", BACKENDS)
def test_gradhess_split_matches_bruteforce(name, impl, rng):
    lam = 1.0
    for _ in range(40):
        n = int(rng.integers(2, 40))
        values = np.sort(rng.choice([0.0, 1.0, 1.0, 4.0, 9.0], size=n))
        grad = rng.normal(size=n)
        hess = rng.random(n) + 0.1
        gain, thr, nl = impl.best_split_gradhess(values, grad, hess, lam, 1)

        best = (-np.inf, 0.0, 0)
        g_tot, h_tot = grad.sum(), hess.sum()
        parent = g_tot**2 / (h_tot + lam)
        for i in range(n - 1):
            if values[i] == values[i + 1]:
                continue
            gl, hl = grad[: i + 1].sum(), hess[: i + 1].sum()
            gr, hr = g_tot - gl, h_tot - hl
            cand = 0.5 * (gl**2 / (hl + lam) + gr**2 / (hr + lam) - parent)
            if cand > best[0]:
                best = (cand, values[i], i + 1)
        if np.isinf(best[0]):
            assert np.isinf(gain)
        else:
            assert gain == pytest.approx(best[0], abs=1e-9)
            assert (thr, nl) == (best[1], best[2])


def test_backends_agree_on_gini(rng):
    if len(BACKENDS) < 2:
        pytest.skip("compiled backend not built")
    for _ in range(80):
        n = int(rng.integers(2, 80))
        values = np.sort(rng.choice([0.0, 1.0, 2.0, 2.0, 5.0], size=n))
        labels = rng.integers(0, 2, size=n).astype(np.float64)
        assert _ref.best_split_gini(values, labels, 2) == BACKENDS[1][1].best_split_gini(
            values, labels, 2
        )


def test_wrapper_accepts_any_dtype():
    c, t, m = kernels.concordance_counts([0.9, 0.1], [1, 2], [1, 0])
    assert (c, t, m) == (1, 0, 1)

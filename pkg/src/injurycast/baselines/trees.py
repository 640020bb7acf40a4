"""Exact-split CART, bagged forests, and second-order boosted trees.

Split search is exact (every distinct threshold considered, no histogram
binning) and runs through the shared kernels. Per-tree randomness is
derived from the master seed by index, so results do not depend on build
order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .. import kernels
from ..errors import TrainingError

MIN_GAIN = 1e-12


@dataclass
class _Node:
    feature: int = -1
    threshold: float = 0.0
    left: "_Node | None" = None
    right: "_Node | None" = None
    value: float = 0.0  # leaf payload: class-1 fraction (CART) or leaf weight (GBT)

    @property
    def is_leaf(self) -> bool:
        return self.left is None


def _predict_node(node: _Node, X: np.ndarray, out: np.ndarray, rows: np.ndarray) -> None:
    if node.is_leaf:
        out[rows] = node.value
        return
    go_left = X[rows, node.feature] <= node.threshold
    _predict_node(node.left, X, out, rows[go_left])
    _predict_node(node.right, X, out, rows[~go_left])


def _tree_predict(root: _Node, X: np.ndarray) -> np.ndarray:
    out = np.empty(X.shape[0])
    _predict_node(root, X, out, np.arange(X.shape[0]))
    return out


def _collect_importance(node: _Node, acc: np.ndarray) -> None:
    if node.is_leaf:
        return
    acc[node.feature] += node.gain_weight  # type: ignore[attr-defined]
    _collect_importance(node.left, acc)
    _collect_importance(node.right, acc)


def _candidate_features(n_features: int, features_per_split: int | None, rng) -> np.ndarray:
    if features_per_split is None or features_per_split >= n_features:
        return np.arange(n_features)
    return np.sort(rng.choice(n_features, size=features_per_split, replace=False))


def _split_candidates(vals: np.ndarray):
    """Sorted finite values only; NaNs are routed to the right child."""
    finite = np.flatnonzero(~np.isnan(vals))
    if finite.size < 2:
        return None
    order = finite[np.argsort(vals[finite], kind="mergesort")]
    return order


def _grow_gini(
    X: np.ndarray,
    y: np.ndarray,
    rows: np.ndarray,
    depth: int,
    max_depth: int,
    min_leaf: int,
    features_per_split: int | None,
    rng,
    n_total: int,
) -> _Node:
    node = _Node(value=float(y[rows].mean()))
    node.gain_weight = 0.0  # type: ignore[attr-defined]
    if depth >= max_depth or rows.size < 2 * min_leaf or node.value in (0.0, 1.0):
        return node
    best = (-np.inf, -1, 0.0)
    for f in _candidate_features(X.shape[1], features_per_split, rng):
        vals = X[rows, f]
        order = _split_candidates(vals)
        if order is None:
            continue
        gain, thr, _ = kernels.best_split_gini(vals[order], y[rows[order]], min_leaf)
        if gain > best[0]:
            best = (gain, int(f), thr)
    gain, f, thr = best
    if gain <= MIN_GAIN:
        return node
    node.feature, node.threshold = f, thr
    node.gain_weight = gain * rows.size / n_total  # type: ignore[attr-defined]
    go_left = X[rows, f] <= thr  # NaN compares False: missing goes right
    node.left = _grow_gini(
        X, y, rows[go_left], depth + 1, max_depth, min_leaf, features_per_split, rng, n_total
    )
    node.right = _grow_gini(
        X, y, rows[~go_left], depth + 1, max_depth, min_leaf, features_per_split, rng, n_total
    )
    return node


@dataclass
class DecisionTreeClassifier:
    max_depth: int = 5
    min_leaf: int = 1
    features_per_split: int | None = None
    root: _Node | None = None
    n_features_: int = 0

    def fit(self, X: np.ndarray, y: np.ndarray, rng=None) -> "DecisionTreeClassifier":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if X.shape[0] == 0:
            raise TrainingError("cannot grow a tree on zero rows")
        rng = rng or np.random.default_rng(0)
        self.n_features_ = X.shape[1]
        self.root = _grow_gini(
            X,
            y,
            np.arange(X.shape[0]),
            0,
            self.max_depth,
            self.min_leaf,
            self.features_per_split,
            rng,
            X.shape[0],
        )
        return self

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return _tree_predict(self.root, np.asarray(X, dtype=np.float64))

    @property
    def feature_importances_(self) -> np.ndarray:
        acc = np.zeros(self.n_features_)
        _collect_importance(self.root, acc)
        return acc


@dataclass
class RandomForestClassifier:
    n_trees: int = 100
    max_depth: int = 8
    min_leaf: int = 2
    features_per_split: int | None = None  # None: ceil(sqrt(d))
    bootstrap: bool = True
    seed: int = 0
    trees: list[DecisionTreeClassifier] = field(default_factory=list)

    def fit(self, X: np.ndarray, y: np.ndarray) -> "RandomForestClassifier":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if X.shape[0] == 0:
            raise TrainingError("cannot fit a forest on zero rows")
        fps = self.features_per_split
        if fps is None:
            fps = max(1, int(np.ceil(np.sqrt(X.shape[1]))))
        self.trees = []
        seeds = np.random.SeedSequence(self.seed).spawn(self.n_trees)
        for tree_seed in seeds:
            rng = np.random.default_rng(tree_seed)
            rows = (
                rng.integers(0, X.shape[0], size=X.shape[0])
                if self.bootstrap
                else np.arange(X.shape[0])
            )
            tree = DecisionTreeClassifier(
                max_depth=self.max_depth, min_leaf=self.min_leaf, features_per_split=fps
            )
            tree.fit(X[rows], y[rows], rng=rng)
            self.trees.append(tree)
        return self

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return np.mean([t.predict_proba(X) for t in self.trees], axis=0)

    @property
    def feature_importances_(self) -> np.ndarray:
        return np.mean([t.feature_importances_ for t in self.trees], axis=0)


def _grow_newton(
    X: np.ndarray,
    grad: np.ndarray,
    hess: np.ndarray,
    rows: np.ndarray,
    depth: int,
    max_depth: int,
    min_leaf: int,
    lam: float,
) -> _Node:
    g_sum = float(grad[rows].sum())
    h_sum = float(hess[rows].sum())
    node = _Node(value=-g_sum / (h_sum + lam))
    node.gain_weight = 0.0  # type: ignore[attr-defined]
    if depth >= max_depth or rows.size < 2 * min_leaf:
        return node
    best = (-np.inf, -1, 0.0)
    for f in range(X.shape[1]):
        vals = X[rows, f]
        order = _split_candidates(vals)
        if order is None:
            continue
        gain, thr, _ = kernels.best_split_gradhess(
            vals[order], grad[rows[order]], hess[rows[order]], lam, min_leaf
        )
        if gain > best[0]:
            best = (gain, int(f), thr)
    gain, f, thr = best
    if gain <= MIN_GAIN:
        return node
    node.feature, node.threshold = f, thr
    node.gain_weight = gain  # type: ignore[attr-defined]
    go_left = X[rows, f] <= thr  # NaN compares False: missing goes right
    node.left = _grow_newton(X, grad, hess, rows[go_left], depth + 1, max_depth, min_leaf, lam)
    node.right = _grow_newton(X, grad, hess, rows[~go_left], depth + 1, max_depth, min_leaf, lam)
    return node


@dataclass
class GradientBoostedTrees:
    """Boosted trees on logistic loss with second-order leaf weights."""

    n_rounds: int = 100
    learning_rate: float = 0.1
    max_depth: int = 3
    min_leaf: int = 2
    reg_lambda: float = 1.0
    seed: int = 0
    base_score_: float = 0.0
    trees: list[_Node] = field(default_factory=list)
    train_losses_: list[float] = field(default_factory=list)
    n_features_: int = 0

    def fit(self, X: np.ndarray, y: np.ndarray) -> "GradientBoostedTrees":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if X.shape[0] == 0:
            raise TrainingError("cannot boost on zero rows")
        self.n_features_ = X.shape[1]
        rate = float(np.clip(y.mean(), 1e-6, 1.0 - 1e-6))
        self.base_score_ = float(np.log(rate / (1.0 - rate)))
        margin = np.full(X.shape[0], self.base_score_)
        self.trees = []
        self.train_losses_ = [self._loss(margin, y)]
        for _ in range(self.n_rounds):
            p = 1.0 / (1.0 + np.exp(-margin))
            grad = p - y
            hess = p * (1.0 - p)
            root = _grow_newton(
                X, grad, hess, np.arange(X.shape[0]), 0, self.max_depth, self.min_leaf, self.reg_lambda
            )
            self.trees.append(root)
            margin = margin + self.learning_rate * _tree_predict(root, X)
            self.train_losses_.append(self._loss(margin, y))
        return self

    @staticmethod
    def _loss(margin: np.ndarray, y: np.ndarray) -> float:
        return float((np.logaddexp(0.0, -margin) * y + np.logaddexp(0.0, margin) * (1 - y)).mean())

    def decision_margin(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        margin = np.full(X.shape[0], self.base_score_)
        for root in self.trees:
            margin += self.learning_rate * _tree_predict(root, X)
        return margin

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return 1.0 / (1.0 + np.exp(-self.decision_margin(X)))

    @property
    def feature_importances_(self) -> np.ndarray:
        acc = np.zeros(self.n_features_)
        for root in self.trees:
            _collect_importance(root, acc)
        return acc


def _design(samples: Sequence) -> tuple[np.ndarray, np.ndarray]:
    X = np.stack([s.x for s in samples])
    y = np.array([s.label for s in samples], dtype=np.float64)
    return X, y


def train_random_forest(
    samples: Sequence,
    n_trees: int = 100,
    max_depth: int = 8,
    min_leaf: int = 2,
    features_per_split: int | None = None,
    seed: int = 0,
    bootstrap: bool = True,
) -> RandomForestClassifier:
    X, y = _design(samples)
    model = RandomForestClassifier(
        n_trees=n_trees,
        max_depth=max_depth,
        min_leaf=min_leaf,
        features_per_split=features_per_split,
        bootstrap=bootstrap,
        seed=seed,
    )
    return model.fit(X, y)


def train_gbt(
    samples: Sequence,
    n_rounds: int = 100,
    lr: float = 0.1,
    max_depth: int = 3,
    min_leaf: int = 2,
    reg_lambda: float = 1.0,
    seed: int = 0,
) -> GradientBoostedTrees:
    X, y = _design(samples)
    model = GradientBoostedTrees(
        n_rounds=n_rounds,
        learning_rate=lr,
        max_depth=max_depth,
        min_leaf=min_leaf,
        reg_lambda=reg_lambda,
        seed=seed,
    )
    return model.fit(X, y)

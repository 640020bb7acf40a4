"""Benchmark classifiers and the model-selection machinery around them.

All three model families are implemented from scratch (gradient-descent
logistic regression, bagged CART forests with Gini splits, second-order
gradient-boosted trees) on top of the shared split kernels, with a common
`predict_proba(X)` surface. `search` adds the weighted scorer, grid search,
greedy forward selection, recursive feature elimination, and the
look-back/horizon window sweep.
"""

from .linear import LogisticRegressionModel, train_logreg
from .search import (
    FAMILIES,
    DEFAULT_CONFIGS,
    ScorerWeights,
    fit_family,
    greedy_forward_select,
    grid_search,
    rfe,
    weighted_score,
    window_sweep,
)
from .trees import (
    DecisionTreeClassifier,
    GradientBoostedTrees,
    RandomForestClassifier,
    train_gbt,
    train_random_forest,
)

__all__ = [
    "DecisionTreeClassifier",
    "DEFAULT_CONFIGS",
    "FAMILIES",
    "GradientBoostedTrees",
    "LogisticRegressionModel",
    "RandomForestClassifier",
    "ScorerWeights",
    "fit_family",
    "greedy_forward_select",
    "grid_search",
    "rfe",
    "train_gbt",
    "train_logreg",
    "train_random_forest",
    "weighted_score",
    "window_sweep",
]

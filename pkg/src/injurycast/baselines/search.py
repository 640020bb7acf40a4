"""Model selection: weighted scorer, grid search, feature selection, sweeps.

Everything evaluates on a chronological validation split with the
oversampled training part, mirroring how the final models are fitted.
Scores come from a weighted blend of F1, recall, precision and AUC;
incomputable metrics contribute zero.
"""

from __future__ import annotations

import csv
import itertools
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from ..cohort import (
    BinarySample,
    apply_scaler,
    build_binary_samples,
    chronological_split,
    fit_scaler,
    oversample_minority,
)
from ..errors import ConfigError, TrainingError
from ..metrics import binary_metrics
from .linear import LogisticRegressionModel
from .trees import GradientBoostedTrees, RandomForestClassifier

log = logging.getLogger(__name__)

FAMILIES = ("logreg", "random_forest", "gbt")

_ALLOWED_KEYS = {
    "logreg": {"l2", "lr", "epochs"},
    "random_forest": {"n_trees", "max_depth", "min_leaf", "features_per_split", "bootstrap"},
    "gbt": {"n_rounds", "lr", "max_depth", "min_leaf", "reg_lambda"},
}

DEFAULT_CONFIGS = {
    "logreg": {"l2": 1e-3, "lr": 0.5, "epochs": 500},
    "random_forest": {"n_trees": 100, "max_depth": 8, "min_leaf": 2},
    "gbt": {"n_rounds": 100, "lr": 0.1, "max_depth": 3},
}

DEFAULT_GRIDS = {
    "logreg": {"l2": [1e-4, 1e-3, 1e-2, 1e-1], "lr": [0.5], "epochs": [500]},
    "random_forest": {
        "n_trees": [50, 100, 200],
        "max_depth": [4, 8, 12],
        "min_leaf": [1, 2, 5],
    },
    "gbt": {
        "n_rounds": [50, 100, 200],
        "lr": [0.05, 0.1, 0.3],
        "max_depth": [2, 3, 4],
    },
}


@dataclass(frozen=True)
class ScorerWeights:
    """Blend weights for the validation scorer; F1 and recall dominate."""

    w_f1: float = 0.4
    w_recall: float = 0.3
    w_precision: float = 0.15
    w_auc: float = 0.15

    def __post_init__(self):
        ws = (self.w_f1, self.w_recall, self.w_precision, self.w_auc)
        if any(w < 0 for w in ws):
            raise ConfigError(f"scorer weights must be >= 0: {ws}")
        if abs(sum(ws) - 1.0) > 1e-9:
            raise ConfigError(f"scorer weights must sum to 1: {ws}")


def weighted_score(metrics: dict[str, float | None], weights: ScorerWeights | None = None) -> float:
    """w_f1*F1 + w_recall*recall + w_precision*precision + w_auc*AUC (None -> 0)."""
    w = weights or ScorerWeights()
    return (
        w.w_f1 * (metrics.get("f1") or 0.0)
        + w.w_recall * (metrics.get("recall") or 0.0)
        + w.w_precision * (metrics.get("precision") or 0.0)
        + w.w_auc * (metrics.get("auc") or 0.0)
    )


def fit_family(family: str, samples: Sequence[BinarySample], config: dict, seed: int):
    """Train one model family from a plain config dict."""
    if family not in FAMILIES:
        raise ConfigError(f"unknown model family {family!r}; expected one of {FAMILIES}")
    unknown = set(config) - _ALLOWED_KEYS[family]
    if unknown:
        raise ConfigError(f"unknown {family} hyperparameters: {sorted(unknown)}")
    X = np.stack([s.x for s in samples])
    y = np.array([s.label for s in samples], dtype=np.float64)
    if family == "logreg":
        return LogisticRegressionModel.fit(X, y, seed=seed, **config)
    if family == "random_forest":
        return RandomForestClassifier(seed=seed, **config).fit(X, y)
    cfg = dict(config)
    if "lr" in cfg:
        cfg["learning_rate"] = cfg.pop("lr")
    return GradientBoostedTrees(seed=seed, **cfg).fit(X, y)


def _subset(samples: Sequence[BinarySample], idx: Sequence[int]) -> list[BinarySample]:
    idx = list(idx)
    return [replace(s, x=s.x[idx]) for s in samples]


def prepare_split(
    samples: Sequence[BinarySample], split_fraction: float, seed: int
) -> tuple[list[BinarySample], list[BinarySample]]:
    """Chronological split, train-fitted standardisation, train oversampling.

    Standardising maps unresolved NaN features to the training mean, which
    every family can consume; the scaler never sees validation rows.
    """
    train, val = chronological_split(samples, split_fraction)
    scaler = fit_scaler(train)
    train = apply_scaler(scaler, train)
    val = apply_scaler(scaler, val)
    return oversample_minority(train, seed), val


def _evaluate(
    family: str,
    config: dict,
    train: Sequence[BinarySample],
    val: Sequence[BinarySample],
    weights: ScorerWeights | None,
    seed: int,
    feature_idx: Sequence[int] | None = None,
) -> tuple[dict, float]:
    if feature_idx is not None:
        train = _subset(train, feature_idx)
        val = _subset(val, feature_idx)
    model = fit_family(family, train, config, seed)
    probas = model.predict_proba(np.stack([s.x for s in val]))
    m = binary_metrics(probas, [s.label for s in val])
    return m, weighted_score(m, weights)


def grid_search(
    family: str,
    grid: dict[str, list],
    samples: Sequence[BinarySample],
    weights: ScorerWeights | None = None,
    seed: int = 0,
    split_fraction: float = 0.8,
) -> tuple[dict, list[dict]]:
    """Exhaustive search over the grid's cartesian product.

    Ties break toward higher F1, then fewer features, then the
    lexicographically smallest config. The leaderboard holds one row per
    cell regardless of enumeration order.
    """
    if not grid or any(not v for v in grid.values()):
        raise ConfigError("grid must have at least one candidate per hyperparameter")
    train, val = prepare_split(samples, split_fraction, seed)
    keys = sorted(grid)
    leaderboard: list[dict] = []
    n_all = len(samples[0].x)
    for combo in itertools.product(*(grid[k] for k in keys)):
        config = dict(zip(keys, combo))
        feature_idx = config.pop("features", None)
        metrics, score = _evaluate(family, config, train, val, weights, seed, feature_idx)
        row = {
            "config": dict(zip(keys, combo)),
            "n_features": len(feature_idx) if feature_idx is not None else n_all,
            "score": score,
            **metrics,
        }
        leaderboard.append(row)
    leaderboard.sort(
        key=lambda r: (
            -r["score"],
            -(r["f1"] if r["f1"] is not None else -1.0),
            r["n_features"],
            repr(sorted(r["config"].items(), key=lambda kv: kv[0])),
        )
    )
    return dict(leaderboard[0]["config"]), leaderboard


def write_leaderboard_csv(leaderboard: list[dict], path: str | Path) -> None:
    if not leaderboard:
        return
    config_keys = sorted(leaderboard[0]["config"])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([*config_keys, "n_features", "f1", "precision", "recall", "auc", "score"])
        for row in leaderboard:
            cells = [repr(row["config"][k]) for k in config_keys]
            for key in ("n_features", "f1", "precision", "recall", "auc", "score"):
                v = row.get(key)
                cells.append("" if v is None else repr(v))
            writer.writerow(cells)


def _names(feature_names: Sequence[str] | None, n: int) -> list[str]:
    if feature_names is None:
        return [f"f{i}" for i in range(n)]
    if len(feature_names) != n:
        raise ConfigError(f"{len(feature_names)} feature names for {n} columns")
    return list(feature_names)


def _featureless_score(
    train: Sequence[BinarySample], val: Sequence[BinarySample], weights: ScorerWeights | None
) -> float:
    """Score of the no-feature model: a constant training-base-rate probability."""
    rate = float(np.mean([s.label for s in train]))
    m = binary_metrics(np.full(len(val), rate), [s.label for s in val])
    return weighted_score(m, weights)


def greedy_forward_select(
    family: str,
    samples: Sequence[BinarySample],
    weights: ScorerWeights | None = None,
    feature_names: Sequence[str] | None = None,
    config: dict | None = None,
    seed: int = 0,
    split_fraction: float = 0.8,
) -> list[str]:
    """Add the feature that most improves the validation score until none does.

    The starting bar is the featureless (constant base-rate) model, so pure
    noise yields an empty selection.
    """
    config = config if config is not None else DEFAULT_CONFIGS[family]
    train, val = prepare_split(samples, split_fraction, seed)
    n = len(samples[0].x)
    names = _names(feature_names, n)
    selected: list[int] = []
    remaining = list(range(n))
    best_score = _featureless_score(train, val, weights)
    while remaining:
        scores = []
        for f in remaining:
            _, score = _evaluate(family, config, train, val, weights, seed, selected + [f])
            scores.append(score)
        k = int(np.argmax(scores))
        if scores[k] <= best_score:
            break
        best_score = scores[k]
        selected.append(remaining.pop(k))
    return [names[i] for i in selected]


def rfe(
    family: str,
    samples: Sequence[BinarySample],
    weights: ScorerWeights | None = None,
    step: int = 1,
    feature_names: Sequence[str] | None = None,
    config: dict | None = None,
    seed: int = 0,
    split_fraction: float = 0.8,
) -> tuple[list[str], list[dict]]:
    """Recursive feature elimination by model importance.

    Importance is impurity/gain-based for trees and |weight| for logistic
    regression; ties drop the lowest feature index first. Returns the
    elimination order (all but the last survivor) and the score path.
    """
    if step < 1:
        raise ConfigError(f"rfe step must be >= 1, got {step}")
    config = config if config is not None else DEFAULT_CONFIGS[family]
    train, val = prepare_split(samples, split_fraction, seed)
    n = len(samples[0].x)
    names = _names(feature_names, n)
    current = list(range(n))
    eliminated: list[str] = []
    path: list[dict] = []
    while len(current) > 1:
        model = fit_family(family, _subset(train, current), config, seed)
        probas = model.predict_proba(np.stack([s.x for s in _subset(val, current)]))
        m = binary_metrics(probas, [s.label for s in val])
        score = weighted_score(m, weights)
        importances = model.feature_importances_
        order = np.argsort(importances, kind="mergesort")  # ties: lowest index first
        n_drop = min(step, len(current) - 1)
        drop_local = sorted(order[:n_drop].tolist())
        dropped_names = [names[current[i]] for i in drop_local]
        path.append(
            {"n_features": len(current), "score": score, "dropped": list(dropped_names)}
        )
        for i in reversed(drop_local):
            current.pop(i)
        eliminated.extend(dropped_names)
    return eliminated, path


def window_sweep(
    family: str,
    panel,
    injuries,
    windows: Sequence[int] = (1, 3, 5, 7, 10, 14),
    weights: ScorerWeights | None = None,
    config: dict | None = None,
    seed: int = 0,
    split_fraction: float = 0.8,
) -> list[dict]:
    """Metrics per (lookback, horizon) combination of the given windows.

    Combinations whose cohorts cannot be split or trained are flagged
    `degenerate`; rows where some metric is undefined are flagged
    `incomputable`.
    """
    config = config if config is not None else DEFAULT_CONFIGS[family]
    rows: list[dict] = []
    for lookback in windows:
        for horizon in windows:
            row: dict = {"lookback": lookback, "horizon": horizon, "flag": "ok"}
            try:
                samples = build_binary_samples(panel, injuries, lookback, horizon)
                if not samples:
                    raise ConfigError("no samples for this window combination")
                train, val = prepare_split(samples, split_fraction, seed)
                metrics, score = _evaluate(family, config, train, val, weights, seed)
                row.update(metrics)
                row["score"] = score
                if any(metrics[k] is None for k in ("f1", "precision", "recall", "auc")):
                    row["flag"] = "incomputable"
            except (ConfigError, TrainingError) as exc:
                log.warning("window sweep (%s, %s) degenerate: %s", lookback, horizon, exc)
                row.update({"f1": None, "precision": None, "recall": None, "auc": None})
                row["score"] = None
                row["flag"] = "degenerate"
            rows.append(row)
    return rows


def write_window_sweep_csv(rows: list[dict], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lookback", "horizon", "f1", "precision", "recall", "auc", "score", "flag"])
        for row in rows:
            writer.writerow(
                [
                    row["lookback"],
                    row["horizon"],
                    *["" if row.get(k) is None else repr(row[k]) for k in ("f1", "precision", "recall", "auc", "score")],
                    row["flag"],
                ]
            )

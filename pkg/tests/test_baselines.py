"""Baseline families, scorer, grid search and feature selection."""

import numpy as np
import pytest

from injurycast.baselines import (
    DecisionTreeClassifier,
    GradientBoostedTrees,
    LogisticRegressionModel,
    RandomForestClassifier,
    ScorerWeights,
    fit_family,
    greedy_forward_select,
    grid_search,
    rfe,
    train_gbt,
    train_logreg,
    train_random_forest,
    weighted_score,
    window_sweep,
)
from injurycast.baselines.linear import logistic_gradient, logistic_loss
from injurycast.cohort import BinarySample
from injurycast.errors import ConfigError
from injurycast.synth import default_spec, generate

from conftest import day


def mk_binary(X, y):
    return [BinarySample("p", day(i), np.asarray(x, float), int(l)) for i, (x, l) in enumerate(zip(X, y))]


class TestLogreg:
    def test_zero_weights_give_half(self):
        model = LogisticRegressionModel(weights=np.zeros(3), bias=0.0, l2=0.0)
        assert np.allclose(model.predict_proba(np.ones((4, 3))), 0.5)

    def test_separable_two_points(self):
        samples = mk_binary([[-1.0], [1.0]], [0, 1])
        model = train_logreg(samples, l2=0.0, lr=1.0, epochs=2000)
        probas = model.predict_proba(np.array([[-1.0], [1.0]]))
        assert probas[0] < 0.5 < probas[1]
        assert ((probas >= 0.5).astype(int) == [0, 1]).all()

    def test_huge_l2_shrinks_to_half(self, rng):
        # lr must satisfy lr * 2 * l2 < 2 for plain gradient descent to converge
        X = rng.normal(size=(50, 3))
        y = (X[:, 0] > 0).astype(int)
        model = LogisticRegressionModel.fit(X, y, l2=100.0, lr=1e-3, epochs=3000)
        assert np.abs(model.weights).max() < 1e-2
        assert np.allclose(model.predict_proba(X), 0.5, atol=2e-3)

    def test_gradient_matches_finite_differences(self, rng):
        X = rng.normal(size=(20, 4))
        y = rng.integers(0, 2, size=20).astype(float)
        w = rng.normal(size=4) * 0.5
        b = 0.3
        l2 = 0.01
        gw, gb = logistic_gradient(w, b, X, y, l2)
        h = 1e-6
        fd = np.zeros_like(w)
        for i in range(4):
            wp, wm = w.copy(), w.copy()
            wp[i] += h
            wm[i] -= h
            fd[i] = (logistic_loss(wp, b, X, y, l2) - logistic_loss(wm, b, X, y, l2)) / (2 * h)
        fb = (logistic_loss(w, b + h, X, y, l2) - logistic_loss(w, b - h, X, y, l2)) / (2 * h)
        scale = max(np.abs(fd).max(), abs(fb), 1e-8)
        assert np.abs(gw - fd).max() / scale < 1e-6
        assert abs(gb - fb) / scale < 1e-6


def brute_threshold(X, y):
    """Exhaustive best Gini threshold on a single feature."""
    values = np.sort(np.unique(X[:, 0]))
    best = (-np.inf, None)

    def gini(labels):
        if len(labels) == 0:
            return 0.0
        p = labels.mean()
        return 2 * p * (1 - p)

    parent = gini(y)
    for i in range(len(values) - 1):
        thr = values[i]
        left, right = y[X[:, 0] <= thr], y[X[:, 0] > thr]
        gain = parent - (len(left) * gini(left) + len(right) * gini(right)) / len(y)
        if gain > best[0]:
            best = (gain, thr)
    return best[1]


class TestTrees:
    def test_depth_one_recovers_threshold(self, rng):
        X = rng.uniform(0, 10, size=(200, 1))
        y = (X[:, 0] > 6.18).astype(float)
        tree = DecisionTreeClassifier(max_depth=1).fit(X, y)
        assert tree.root.feature == 0
        assert tree.root.threshold == brute_threshold(X, y)
        preds = tree.predict_proba(np.array([[2.0], [9.0]]))
        assert preds[0] == 0.0 and preds[1] == 1.0

    def test_forest_of_one_equals_cart(self, rng):
        X = rng.normal(size=(80, 3))
        y = (X[:, 1] > 0).astype(float)
        forest = RandomForestClassifier(
            n_trees=1, max_depth=4, bootstrap=False, features_per_split=3, seed=5
        ).fit(X, y)
        cart = DecisionTreeClassifier(max_depth=4).fit(X, y)
        np.testing.assert_array_equal(forest.predict_proba(X), cart.predict_proba(X))

    def test_forest_deterministic_per_seed(self, rng):
        X = rng.normal(size=(60, 4))
        y = (X[:, 0] + X[:, 2] > 0).astype(float)
        samples = mk_binary(X, y)
        a = train_random_forest(samples, n_trees=10, seed=9).predict_proba(X)
        b = train_random_forest(samples, n_trees=10, seed=9).predict_proba(X)
        np.testing.assert_array_equal(a, b)

    def test_prediction_variance_shrinks_with_trees(self, rng):
        X = rng.normal(size=(120, 3))
        clean = (X[:, 0] > 0.2).astype(float)
        flip = rng.random(120) < 0.2  # label noise so bootstrap trees disagree
        y = np.where(flip, 1 - clean, clean)
        grid = rng.normal(size=(30, 3))
        variances = []
        for n_trees in (1, 10, 100):
            preds = np.stack(
                [
                    RandomForestClassifier(n_trees=n_trees, max_depth=4, seed=s)
                    .fit(X, y)
                    .predict_proba(grid)
                    for s in range(8)
                ]
            )
            variances.append(preds.var(axis=0).mean())
        assert variances[0] > variances[1] > variances[2]


class TestGbt:
    def test_zero_rounds_is_base_rate(self, rng):
        X = rng.normal(size=(40, 2))
        y = np.array([1] * 10 + [0] * 30, dtype=float)
        model = GradientBoostedTrees(n_rounds=0).fit(X, y)
        np.testing.assert_allclose(model.predict_proba(X), 0.25, atol=1e-12)

    def test_zero_learning_rate_matches_zero_rounds(self, rng):
        X = rng.normal(size=(40, 2))
        y = (X[:, 0] > 0).astype(float)
        frozen = GradientBoostedTrees(n_rounds=5, learning_rate=0.0).fit(X, y)
        empty = GradientBoostedTrees(n_rounds=0).fit(X, y)
        np.testing.assert_allclose(frozen.predict_proba(X), empty.predict_proba(X), atol=1e-12)

    def test_loss_nonincreasing_per_round(self, rng):
        X = rng.normal(size=(150, 4))
        y = ((X[:, 0] + 0.5 * X[:, 1]) > 0).astype(float)
        model = train_gbt(mk_binary(X, y), n_rounds=30, lr=0.1, max_depth=3)
        losses = model.train_losses_
        assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))

    def test_single_stump_beats_constant(self, rng):
        X = rng.uniform(-1, 1, size=(100, 1))
        y = (X[:, 0] > 0).astype(float)
        model = GradientBoostedTrees(n_rounds=1, learning_rate=0.5, max_depth=1).fit(X, y)
        assert model.train_losses_[1] < model.train_losses_[0]


class TestWeightedScore:
    def test_default_blend(self):
        metrics = {"f1": 0.5, "recall": 0.4, "precision": 1.0, "auc": 0.8}
        assert weighted_score(metrics) == pytest.approx(0.59)

    def test_all_ones(self):
        metrics = {"f1": 1.0, "recall": 1.0, "precision": 1.0, "auc": 1.0}
        assert weighted_score(metrics) == pytest.approx(1.0)

    def test_pure_f1_weights(self):
        metrics = {"f1": 0.7, "recall": 0.1, "precision": 0.1, "auc": 0.1}
        assert weighted_score(metrics, ScorerWeights(1.0, 0.0, 0.0, 0.0)) == pytest.approx(0.7)

    def test_none_contributes_zero(self):
        metrics = {"f1": 0.5, "recall": 0.5, "precision": None, "auc": None}
        assert weighted_score(metrics) == pytest.approx(0.4 * 0.5 + 0.3 * 0.5)

    def test_invalid_weights(self):
        with pytest.raises(ConfigError):
            ScorerWeights(0.5, 0.5, 0.5, 0.5)
        with pytest.raises(ConfigError):
            ScorerWeights(-0.1, 0.6, 0.3, 0.2)


def _signal_samples(rng, n=200, n_noise=3):
    """Feature 0 drives the label; the rest are noise."""
    X = rng.normal(size=(n, 1 + n_noise))
    y = (X[:, 0] + 0.3 * rng.normal(size=n) > 0).astype(int)
    return mk_binary(X, y)


class TestGridSearch:
    def test_single_cell(self, rng):
        samples = _signal_samples(rng)
        best, board = grid_search("logreg", {"l2": [0.01], "lr": [0.5], "epochs": [50]}, samples)
        assert best == {"l2": 0.01, "lr": 0.5, "epochs": 50}
        assert len(board) == 1

    def test_leaderboard_cardinality(self, rng):
        samples = _signal_samples(rng)
        grid = {"l2": [0.001, 0.1], "lr": [0.2, 0.5], "epochs": [30]}
        _, board = grid_search("logreg", grid, samples)
        assert len(board) == 4

    def test_enumeration_order_invariant(self, rng):
        samples = _signal_samples(rng)
        grid_a = {"n_rounds": [5, 20], "lr": [0.1, 0.3], "max_depth": [1, 2]}
        grid_b = {"max_depth": [2, 1], "lr": [0.3, 0.1], "n_rounds": [20, 5]}
        best_a, board_a = grid_search("gbt", grid_a, samples, seed=3)
        best_b, board_b = grid_search("gbt", grid_b, samples, seed=3)
        assert best_a == best_b
        assert [r["config"] for r in board_a] == [r["config"] for r in board_b]

    def test_duplicate_configs_score_identically(self, rng):
        samples = _signal_samples(rng)
        _, board = grid_search("logreg", {"l2": [0.01, 0.01], "lr": [0.5], "epochs": [40]}, samples)
        assert len(board) == 2
        assert board[0]["score"] == board[1]["score"]
        assert board[0]["config"] == board[1]["config"]

    def test_unknown_family_and_keys(self, rng):
        samples = _signal_samples(rng)
        with pytest.raises(ConfigError):
            grid_search("svm", {"c": [1]}, samples)
        with pytest.raises(ConfigError):
            fit_family("logreg", samples, {"bogus": 1}, seed=0)
        with pytest.raises(ConfigError):
            grid_search("logreg", {"l2": []}, samples)


class TestFeatureSelection:
    def test_greedy_picks_informative_first(self, rng):
        samples = _signal_samples(rng, n=300)
        chosen = greedy_forward_select(
            "logreg", samples, feature_names=["signal", "n1", "n2", "n3"], seed=1
        )
        assert chosen and chosen[0] == "signal"

    def test_greedy_empty_on_pure_noise(self, rng):
        X = rng.normal(size=(200, 3))
        y = rng.integers(0, 2, size=200)
        samples = mk_binary(X, y)
        assert greedy_forward_select("logreg", samples, seed=2) == []

    def test_rfe_drops_noise_before_signal(self, rng):
        samples = _signal_samples(rng, n=300)
        eliminated, path = rfe(
            "gbt", samples, feature_names=["signal", "n1", "n2", "n3"], seed=1
        )
        assert len(eliminated) == 3
        assert "signal" not in eliminated  # survives to the end
        assert [p["n_features"] for p in path] == [4, 3, 2]

    def test_rfe_single_feature_no_elimination(self, rng):
        X = rng.normal(size=(50, 1))
        y = (X[:, 0] > 0).astype(int)
        eliminated, path = rfe("logreg", mk_binary(X, y))
        assert eliminated == [] and path == []


class TestWindowSweep:
    def test_table_shape_and_flags(self):
        spec = default_spec(seed=5, base_rate=0.02)
        panel, injuries = generate(4, 70, spec)
        from injurycast.features import derive_features
        from injurycast.impute import impute_median

        full = impute_median(derive_features(panel, injuries))
        rows = window_sweep(
            "logreg",
            full,
            injuries,
            windows=(3, 7),
            config={"l2": 0.01, "lr": 0.3, "epochs": 60},
        )
        assert len(rows) == 4
        assert {(r["lookback"], r["horizon"]) for r in rows} == {(3, 3), (3, 7), (7, 3), (7, 7)}
        assert all(r["flag"] in ("ok", "incomputable", "degenerate") for r in rows)

    def test_all_censored_window_flagged(self):
        # no injuries at all: labels are constant 0, AUC undefined
        spec = default_spec(n_hazard=0, n_noise=3, base_rate=0.0001, seed=17)
        panel, _ = generate(4, 60, spec)
        from injurycast.features import derive_features
        from injurycast.impute import impute_median

        full = impute_median(derive_features(panel, []))
        rows = window_sweep("logreg", full, [], windows=(7,), config={"l2": 0.01, "lr": 0.3, "epochs": 30})
        assert rows[0]["flag"] in ("incomputable", "degenerate")
        assert rows[0]["auc"] is None

    def test_sweep_row_matches_single_run(self):
        # the (lookback, horizon) cell must agree with running that window
        # through the standalone evaluation path
        from injurycast.baselines.search import _evaluate, prepare_split
        from injurycast.cohort import build_binary_samples
        from injurycast.features import derive_features
        from injurycast.impute import impute_median

        spec = default_spec(seed=6, base_rate=0.02)
        panel, injuries = generate(4, 70, spec)
        full = impute_median(derive_features(panel, injuries))
        config = {"l2": 0.01, "lr": 0.3, "epochs": 60}
        rows = window_sweep("logreg", full, injuries, windows=(7,), config=config, seed=2)
        samples = build_binary_samples(full, injuries, 7, 7)
        train, val = prepare_split(samples, 0.8, 2)
        metrics, score = _evaluate("logreg", config, train, val, None, 2)
        row = rows[0]
        assert row["flag"] == "ok"
        for key in ("f1", "precision", "recall", "auc"):
            assert row[key] == metrics[key]
        assert row["score"] == score

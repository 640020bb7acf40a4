"""Shapley attribution axioms on closed-form and random score functions."""

import numpy as np
import pytest

from injurycast.errors import ConfigError
from injurycast.explain import kernel_shap, season_importance, top_features
from injurycast.cohort import BinarySample, fit_scaler

from conftest import day, make_panel
from test_deephit import build_model


def linear_fn(w):
    w = np.asarray(w, dtype=float)
    return lambda X: np.asarray(X, dtype=float) @ w


class TestKernelShapExact:
    def test_linear_model_oracle(self, rng):
        # Shapley of a linear model: phi_i = w_i * (x_i - background mean_i)
        w = np.array([2.0, 3.0])
        background = rng.normal(0.0, 1.0, size=(64, 2))
        background -= background.mean(axis=0)  # mean exactly (0, 0)
        att = kernel_shap(linear_fn(w), np.array([1.0, 1.0]), background)
        np.testing.assert_allclose(att.phi, [2.0, 3.0], atol=1e-9)
        assert att.prediction == pytest.approx(5.0)

    def test_x_equal_to_single_background_point(self):
        x = np.array([0.4, -1.2, 3.3])
        att = kernel_shap(linear_fn([1.0, 2.0, 3.0]), x, x[np.newaxis, :])
        np.testing.assert_allclose(att.phi, 0.0, atol=1e-12)

    def test_symmetry_axiom(self):
        f = lambda X: X[:, 0] + X[:, 1]
        background = np.array([[0.0, 0.0], [2.0, 2.0]])
        att = kernel_shap(f, np.array([1.0, 1.0]), background)
        assert att.phi[0] == pytest.approx(att.phi[1], abs=1e-12)

    def test_local_accuracy_random_models(self, rng):
        for _ in range(10):
            d = int(rng.integers(2, 7))
            w1 = rng.normal(size=(d, 5))
            w2 = rng.normal(size=5)
            f = lambda X: np.tanh(np.asarray(X) @ w1) @ w2
            x = rng.normal(size=d)
            background = rng.normal(size=(30, d))
            att = kernel_shap(f, x, background)
            assert att.base_value + att.phi.sum() == pytest.approx(att.prediction, abs=1e-9)

    def test_empty_background_rejected(self):
        with pytest.raises(ConfigError):
            kernel_shap(linear_fn([1.0]), np.array([1.0]), np.empty((0, 1)))


class TestKernelShapSampled:
    def test_local_accuracy_enforced(self, rng):
        d = 16  # beyond the exact-enumeration limit
        w = rng.normal(size=d)
        x = rng.normal(size=d)
        background = rng.normal(size=(20, d))
        att = kernel_shap(linear_fn(w), x, background, n_coalitions=512, seed=1)
        assert att.base_value + att.phi.sum() == pytest.approx(att.prediction, abs=1e-9)

    def test_dummy_axiom(self, rng):
        d = 14
        w = rng.normal(size=d)
        w[3] = 0.0  # ignored feature
        x = rng.normal(size=d)
        background = rng.normal(size=(25, d))
        att = kernel_shap(linear_fn(w), x, background, n_coalitions=4096, seed=2)
        assert abs(att.phi[3]) < 1e-2

    def test_matches_exact_on_eight_features(self, rng):
        d = 8
        w1 = rng.normal(size=(d, 4))
        w2 = rng.normal(size=4)
        f = lambda X: np.tanh(np.asarray(X) @ w1) @ w2
        x = rng.normal(size=d)
        background = rng.normal(size=(20, d))
        exact = kernel_shap(f, x, background, exact=True)
        sampled = kernel_shap(f, x, background, n_coalitions=4096, seed=3, exact=False)
        assert np.max(np.abs(exact.phi - sampled.phi)) < 5e-2

    def test_deterministic_per_seed(self, rng):
        d = 13
        f = linear_fn(rng.normal(size=d))
        x = rng.normal(size=d)
        background = rng.normal(size=(15, d))
        a = kernel_shap(f, x, background, n_coalitions=256, seed=9)
        b = kernel_shap(f, x, background, n_coalitions=256, seed=9)
        np.testing.assert_array_equal(a.phi, b.phi)


class TestModelAttribution:
    def _setup(self, rng):
        panel = make_panel(
            {
                "p1": {d: {"a": float(d % 5), "b": 1.0} for d in range(30)},
                "p2": {d: {"a": 2.0, "b": float(d % 3)} for d in range(30)},
            },
            ["a", "b"],
            n_days=30,
        )
        model = build_model(input_dim=2, seed=21)
        model.feature_names = ["a", "b"]
        model.lookback = 5
        samples = [BinarySample("p", day(i), rng.normal(size=2), 0) for i in range(20)]
        model.scaler = fit_scaler(samples)
        background = rng.normal(size=(12, 2))
        return panel, model, background

    def test_season_importance_ranked_and_stable(self, rng):
        panel, model, background = self._setup(rng)
        r1 = season_importance(model, panel, "p1", background, seed=4, max_days=6)
        r2 = season_importance(model, panel, "p1", background, seed=4, max_days=6)
        assert r1 == r2
        assert [name for name, _ in r1] in (["a", "b"], ["b", "a"])
        assert all(v >= 0 for _, v in r1)

    def test_constant_prediction_zero_importance(self, rng):
        panel, model, background = self._setup(rng)
        for w in model.weights:
            w[:] = 0.0
        ranked = season_importance(model, panel, "p1", background, max_days=4)
        assert all(v == pytest.approx(0.0, abs=1e-12) for _, v in ranked)
        # deterministic alphabetical tie-break
        assert [name for name, _ in ranked] == ["a", "b"]

    def test_top_features_truncation(self, rng):
        panel, model, background = self._setup(rng)
        from injurycast.explain import day_explanation

        att = day_explanation(model, panel, "p1", day(10), background)
        assert att.player_id == "p1"
        assert att.date == day(10)
        assert len(top_features(att, 10)) == 2  # k > n_features returns all
        assert len(top_features(att, 1)) == 1
        assert att.base_value + att.phi.sum() == pytest.approx(att.prediction, abs=1e-3)

"""Sample construction, standardisation and splits."""

import logging

import numpy as np
import pytest

from injurycast.cohort import (
    build_binary_samples,
    build_survival_samples,
    chronological_split,
    fit_scaler,
    apply_scaler,
    lopo_folds,
    oversample_minority,
    BinarySample,
)
from injurycast.errors import ConfigError
from injurycast.synth import default_spec, generate

from conftest import day, injury, make_panel


def _long_panel(n_days=120, players=("p1",)):
    data = {p: {d: {"x": float(d % 7), "srpe": 100.0} for d in range(n_days)} for p in players}
    return make_panel(data, ["x", "srpe"], n_days=n_days)


def brute_survival_labels(panel, injuries, lookback, horizon, gap):
    """Day-by-day scan over the injury set; independent of the bisect path."""
    labels = {}
    for player in panel.players:
        lo, hi = panel.obs_range_idx(player)
        inj_days = {
            (e.date - panel.start_date).days for e in injuries if e.player_id == player
        }
        for d in range(lo, hi + 1):
            if d - lo + 1 < lookback:
                continue
            if any(j <= d <= j + gap for j in inj_days):
                continue
            found = None
            for k in range(1, horizon + 1):
                if d + k in inj_days:
                    found = k
                    break
            if found is not None:
                labels[(player, d)] = (found, 1)
            else:
                remaining = hi - d
                if remaining < 1:
                    continue
                labels[(player, d)] = (min(horizon, remaining), 0)
    return labels


class TestSurvivalLabels:
    def test_event_five_days_ahead(self):
        panel = _long_panel()
        samples = build_survival_samples(panel, [injury("p1", 100)], 21, 7)
        by_day = {(s.player_id, (s.anchor_date - day(0)).days): s for s in samples}
        s = by_day[("p1", 95)]
        assert (s.time_to_event, s.event) == (5, 1)

    def test_beyond_horizon_censored_at_horizon(self):
        panel = _long_panel()
        samples = build_survival_samples(panel, [injury("p1", 100)], 21, 7)
        by_day = {(s.player_id, (s.anchor_date - day(0)).days): s for s in samples}
        assert (by_day[("p1", 90)].time_to_event, by_day[("p1", 90)].event) == (7, 0)

    def test_administrative_censoring_near_end(self):
        panel = _long_panel(n_days=120)
        samples = build_survival_samples(panel, [], 21, 7)
        by_day = {(s.player_id, (s.anchor_date - day(0)).days): s for s in samples}
        assert (by_day[("p1", 116)].time_to_event, by_day[("p1", 116)].event) == (3, 0)
        assert ("p1", 119) not in by_day  # zero days remaining

    def test_recovery_gap_excluded(self):
        panel = _long_panel()
        samples = build_survival_samples(panel, [injury("p1", 60)], 21, 7, post_injury_gap=7)
        anchors = {(s.anchor_date - day(0)).days for s in samples}
        for d in range(60, 68):
            assert d not in anchors
        assert 59 in anchors and 68 in anchors

    def test_lookback_history_required(self):
        panel = _long_panel()
        samples = build_survival_samples(panel, [], 21, 7)
        assert min((s.anchor_date - day(0)).days for s in samples) == 20

    def test_config_errors(self):
        panel = _long_panel()
        with pytest.raises(ConfigError):
            build_survival_samples(panel, [], 0, 7)
        with pytest.raises(ConfigError):
            build_survival_samples(panel, [], 21, 0)

    def test_matches_bruteforce_on_random_cohorts(self):
        for seed in range(4):
            spec = default_spec(seed=seed, base_rate=0.01)
            panel, injuries = generate(4, 90, spec)
            samples = build_survival_samples(panel, injuries, 21, 7)
            got = {
                (s.player_id, (s.anchor_date - panel.start_date).days): (s.time_to_event, s.event)
                for s in samples
            }
            assert got == brute_survival_labels(panel, injuries, 21, 7, 7)


class TestBinaryLabels:
    def test_horizon_one(self):
        panel = _long_panel()
        samples = build_binary_samples(panel, [injury("p1", 50)], 7, 1)
        by_day = {(s.anchor_date - day(0)).days: s.label for s in samples}
        assert by_day[49] == 1
        assert by_day[48] == 0

    def test_horizon_seven(self):
        panel = _long_panel()
        samples = build_binary_samples(panel, [injury("p1", 50)], 7, 7)
        by_day = {(s.anchor_date - day(0)).days: s.label for s in samples}
        assert by_day[45] == 1  # injury in 5 days
        assert by_day[43] == 1  # exactly 7 ahead
        assert by_day[42] == 0  # 8 ahead

    def test_anchors_stop_horizon_before_end(self):
        panel = _long_panel(n_days=40)
        samples = build_binary_samples(panel, [], 7, 7)
        assert max((s.anchor_date - day(0)).days for s in samples) == 32


class TestScaler:
    def test_population_sd_convention(self):
        samples = [BinarySample("p", day(i), np.array([v]), 0) for i, v in enumerate([0.0, 10.0])]
        stats = fit_scaler(samples)
        out = apply_scaler(stats, samples)
        assert [s.x[0] for s in out] == pytest.approx([-1.0, 1.0])

    def test_constant_column_maps_to_zero(self):
        samples = [BinarySample("p", day(i), np.array([4.2]), 0) for i in range(5)]
        out = apply_scaler(fit_scaler(samples), samples)
        assert all(s.x[0] == 0.0 for s in out)

    def test_train_rows_become_standard(self, rng):
        samples = [
            BinarySample("p", day(i), rng.normal(5, 3, size=4), 0) for i in range(50)
        ]
        out = apply_scaler(fit_scaler(samples), samples)
        X = np.stack([s.x for s in out])
        assert np.abs(X.mean(axis=0)).max() < 1e-9
        assert np.abs(X.std(axis=0) - 1.0).max() < 1e-9

    def test_nan_maps_to_zero_after_transform(self):
        samples = [
            BinarySample("p", day(0), np.array([1.0, np.nan]), 0),
            BinarySample("p", day(1), np.array([3.0, 7.0]), 0),
        ]
        out = apply_scaler(fit_scaler(samples), samples)
        assert out[0].x[1] == 0.0
        assert np.isfinite(np.stack([s.x for s in out])).all()

    def test_already_standard_column_unchanged(self):
        vals = np.array([-1.0, 1.0])
        samples = [BinarySample("p", day(i), np.array([v]), 0) for i, v in enumerate(vals)]
        out = apply_scaler(fit_scaler(samples), samples)
        assert np.allclose([s.x[0] for s in out], vals, atol=1e-9)


class TestChronologicalSplit:
    def _samples(self, dates):
        return [BinarySample("p", d, np.zeros(1), 0) for d in dates]

    def test_eighty_twenty_by_dates(self):
        samples = self._samples([day(i) for i in range(10)])
        train, test = chronological_split(samples, 0.8)
        assert len(train) == 8 and len(test) == 2
        assert max(s.anchor_date for s in train) < min(s.anchor_date for s in test)

    def test_boundary_date_goes_whole_to_train(self):
        dates = [day(0)] * 4 + [day(1)] * 4 + [day(2)] * 2
        train, test = chronological_split(self._samples(dates), 0.8)
        assert all(s.anchor_date <= day(1) for s in train)
        assert len(train) == 8 and len(test) == 2

    def test_tie_straddling_boundary_pulls_whole_date(self):
        dates = [day(0)] * 5 + [day(1)] * 3 + [day(2)] * 2
        train, test = chronological_split(self._samples(dates), 0.7)
        # cut lands inside day(1)'s block; the whole date moves to train
        assert len(train) == 8 and len(test) == 2

    def test_boundary_on_last_date_degenerates(self):
        dates = [day(0)] * 5 + [day(1)] * 5
        with pytest.raises(ConfigError):
            chronological_split(self._samples(dates), 0.7)

    def test_single_date_is_config_error(self):
        with pytest.raises(ConfigError):
            chronological_split(self._samples([day(0)] * 5), 0.8)

    def test_strict_date_separation(self, rng):
        dates = [day(int(d)) for d in rng.integers(0, 30, size=100)]
        train, test = chronological_split(self._samples(dates), 0.8)
        assert max(s.anchor_date for s in train) < min(s.anchor_date for s in test)


class TestLopoFolds:
    def test_one_fold_per_player_disjoint(self):
        samples = [BinarySample(f"p{i % 5}", day(i), np.zeros(1), 0) for i in range(25)]
        folds = lopo_folds(samples)
        assert len(folds) == 5
        held_out = []
        for train, test in folds:
            test_players = {s.player_id for s in test}
            assert len(test_players) == 1
            player = test_players.pop()
            held_out.append(player)
            assert all(s.player_id != player for s in train)
            assert len(train) + len(test) == 25
        assert sorted(held_out) == [f"p{i}" for i in range(5)]


class TestOversample:
    def _make(self, n_neg, n_pos):
        neg = [BinarySample("p", day(i), np.zeros(1), 0) for i in range(n_neg)]
        pos = [BinarySample("p", day(100 + i), np.ones(1), 1) for i in range(n_pos)]
        return neg + pos

    def test_balances_to_one_to_one(self):
        out = oversample_minority(self._make(100, 10), seed=0)
        labels = [s.label for s in out]
        assert labels.count(1) == labels.count(0) == 100

    def test_balanced_input_unchanged(self):
        data = self._make(5, 5)
        assert oversample_minority(data, seed=1) == data

    def test_zero_positives_warns_and_returns_input(self, caplog):
        data = self._make(5, 0)
        with caplog.at_level(logging.WARNING):
            out = oversample_minority(data, seed=2)
        assert out == data
        assert "no positive rows" in caplog.text

    def test_deterministic_per_seed(self):
        data = self._make(30, 4)
        a = oversample_minority(data, seed=42)
        b = oversample_minority(data, seed=42)
        c = oversample_minority(data, seed=43)
        assert a == b
        assert a != c

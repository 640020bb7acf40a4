"""Supervised dataset construction from an imputed feature panel.

Survival samples carry a discrete time-to-event over a 7-day horizon
(event = injury, censored otherwise); binary samples carry an
injury-within-horizon label for the baseline classifiers. Feature vectors
are trailing means over the look-back window, aligned to the panel's
feature order; entries with no observed data in the window are NaN until
standardisation maps them to 0.
"""

from __future__ import annotations

import csv
import datetime as dt
import logging
import math
from bisect import bisect_right
from collections import defaultdict
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError, DataError
from .features import rolling_means
from .ingest import InjuryEvent
from .panel import FeaturePanel

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SurvivalSample:
    player_id: str
    anchor_date: dt.date
    x: np.ndarray
    time_to_event: int  # in {1..horizon}
    event: int  # 1 = injury, 0 = censored


@dataclass(frozen=True)
class BinarySample:
    player_id: str
    anchor_date: dt.date
    x: np.ndarray
    label: int


@dataclass(frozen=True)
class ScalerStats:
    """Per-feature mean/SD (population SD, divisor n) fitted on training rows."""

    mean: np.ndarray
    sd: np.ndarray


def _injury_days(
    injuries: list[InjuryEvent], panel: FeaturePanel
) -> dict[str, list[int]]:
    days: dict[str, list[int]] = defaultdict(list)
    for e in injuries:
        if e.player_id in set(panel.players):
            days[e.player_id].append((e.date - panel.start_date).days)
    for v in days.values():
        v.sort()
    return days


def _anchor_features(panel: FeaturePanel, lookback: int) -> np.ndarray:
    """(players, days, features) of trailing-lookback means, NaN where undefined."""
    agg = rolling_means(panel, lookback)
    return np.where(agg.mask, agg.values, np.nan)


def build_survival_samples(
    panel: FeaturePanel,
    injuries: list[InjuryEvent],
    lookback: int = 21,
    horizon: int = 7,
    post_injury_gap: int = 7,
) -> list[SurvivalSample]:
    """Anchor every eligible player-day and label time-to-injury.

    Anchors need `lookback` days of history. Days from an injury through
    `post_injury_gap` days after it are excluded (recovery is not a
    well-defined risk set). An injury k <= horizon days ahead yields
    (time=k, event=1); otherwise the sample is censored at the horizon or
    at the number of observed days remaining, whichever is smaller.
    """
    if lookback < 1 or horizon < 1:
        raise ConfigError(f"lookback and horizon must be >= 1, got {lookback}/{horizon}")
    if post_injury_gap < 0:
        raise ConfigError(f"post_injury_gap must be >= 0, got {post_injury_gap}")
    feats = _anchor_features(panel, lookback)
    injury_days = _injury_days(injuries, panel)
    samples: list[SurvivalSample] = []
    for p, player in enumerate(panel.players):
        lo, hi = panel.obs_range_idx(player)
        inj = injury_days.get(player, [])
        for d in range(lo + lookback - 1, hi + 1):
            if any(j <= d <= j + post_injury_gap for j in inj):
                continue
            nxt = bisect_right(inj, d)
            k = inj[nxt] - d if nxt < len(inj) else None
            if k is not None and k <= horizon:
                time, event = k, 1
            else:
                remaining = hi - d
                if remaining < 1:
                    continue
                time, event = min(horizon, remaining), 0
            samples.append(
                SurvivalSample(
                    player_id=player,
                    anchor_date=panel.start_date + dt.timedelta(days=d),
                    x=feats[p, d].copy(),
                    time_to_event=time,
                    event=event,
                )
            )
    return samples


def build_binary_samples(
    panel: FeaturePanel,
    injuries: list[InjuryEvent],
    lookback: int,
    horizon: int,
) -> list[BinarySample]:
    """Label 1 iff an injury falls within (anchor, anchor + horizon].

    Anchors closer than `horizon` days to the end of the observation range
    are dropped so a 0 label always means injury-free, not unobserved.
    """
    if lookback < 1 or horizon < 1:
        raise ConfigError(f"lookback and horizon must be >= 1, got {lookback}/{horizon}")
    feats = _anchor_features(panel, lookback)
    injury_days = _injury_days(injuries, panel)
    samples: list[BinarySample] = []
    for p, player in enumerate(panel.players):
        lo, hi = panel.obs_range_idx(player)
        inj = injury_days.get(player, [])
        for d in range(lo + lookback - 1, hi - horizon + 1):
            label = int(any(d < j <= d + horizon for j in inj))
            samples.append(
                BinarySample(
                    player_id=player,
                    anchor_date=panel.start_date + dt.timedelta(days=d),
                    x=feats[p, d].copy(),
                    label=label,
                )
            )
    return samples


# -- standardisation ---------------------------------------------------------


def fit_scaler(samples: Sequence) -> ScalerStats:
    """Population mean/SD per feature over the given rows, NaN-aware.

    Fully-missing columns get mean 0 / SD 0 and therefore transform to 0.
    """
    if not samples:
        raise ConfigError("cannot fit a scaler on zero rows")
    X = np.stack([s.x for s in samples])
    observed = ~np.isnan(X)
    counts = np.maximum(observed.sum(axis=0), 1)
    filled = np.where(observed, X, 0.0)
    mean = filled.sum(axis=0) / counts
    mean = np.where(observed.any(axis=0), mean, 0.0)
    sq = np.where(observed, (X - mean) ** 2, 0.0).sum(axis=0)
    sd = np.sqrt(sq / counts)
    return ScalerStats(mean=mean, sd=sd)


def transform_x(stats: ScalerStats, x: np.ndarray) -> np.ndarray:
    """Standardise one feature vector; SD-0 features and NaNs map to 0."""
    safe_sd = np.where(stats.sd > 0, stats.sd, 1.0)
    z = (x - stats.mean) / safe_sd
    z = np.where(stats.sd > 0, z, 0.0)
    return np.where(np.isnan(z), 0.0, z)


def apply_scaler(stats: ScalerStats, samples: Sequence) -> list:
    """New samples with standardised feature vectors (inputs untouched)."""
    return [replace(s, x=transform_x(stats, s.x)) for s in samples]


# -- splits ------------------------------------------------------------------


def chronological_split(samples: Sequence, fraction: float = 0.8) -> tuple[list, list]:
    """Date-grouped chronological split: the boundary date goes whole to train."""
    if not 0.0 < fraction < 1.0:
        raise ConfigError(f"split fraction must be in (0, 1), got {fraction}")
    if not samples:
        raise ConfigError("cannot split zero samples")
    ordered = sorted(samples, key=lambda s: (s.anchor_date, s.player_id))
    cut = math.ceil(fraction * len(ordered))
    boundary = ordered[cut - 1].anchor_date
    train = [s for s in ordered if s.anchor_date <= boundary]
    test = [s for s in ordered if s.anchor_date > boundary]
    if not test:
        raise ConfigError(
            "chronological split degenerate: all samples share the boundary date"
        )
    return train, test


def lopo_folds(samples: Sequence) -> list[tuple[list, list]]:
    """One (train, test) fold per player; test holds exactly that player."""
    players = sorted({s.player_id for s in samples})
    folds = []
    for player in players:
        test = [s for s in samples if s.player_id == player]
        train = [s for s in samples if s.player_id != player]
        folds.append((train, test))
    return folds


def oversample_minority(train: Sequence[BinarySample], seed: int) -> list[BinarySample]:
    """Duplicate minority-class rows with replacement until classes balance.

    Training-set-only by contract; deterministic per seed. With zero
    positives the input is returned unchanged (warned).
    """
    pos = [s for s in train if s.label == 1]
    neg = [s for s in train if s.label == 0]
    if not pos:
        log.warning("oversample_minority: no positive rows, returning input unchanged")
        return list(train)
    if len(pos) == len(neg):
        return list(train)
    minority, majority = (pos, neg) if len(pos) < len(neg) else (neg, pos)
    rng = np.random.default_rng(seed)
    extra_idx = rng.integers(0, len(minority), size=len(majority) - len(minority))
    return list(train) + [minority[i] for i in extra_idx]


# -- matrices & audit exports -------------------------------------------------


def design_matrix(samples: Sequence) -> np.ndarray:
    if not samples:
        raise DataError("no samples")
    return np.stack([s.x for s in samples])


def survival_arrays(samples: Sequence[SurvivalSample]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    X = design_matrix(samples)
    t = np.array([s.time_to_event for s in samples], dtype=np.int64)
    e = np.array([s.event for s in samples], dtype=np.int64)
    return X, t, e


def write_survival_csv(
    samples: Sequence[SurvivalSample], feature_names: Sequence[str], path: str | Path
) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["player_id", "anchor_date", "time_to_event", "event", *feature_names])
        for s in samples:
            cells = ["" if np.isnan(v) else repr(float(v)) for v in s.x]
            writer.writerow([s.player_id, s.anchor_date.isoformat(), s.time_to_event, s.event, *cells])


def write_binary_csv(
    samples: Sequence[BinarySample], feature_names: Sequence[str], path: str | Path
) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["player_id", "anchor_date", "label", *feature_names])
        for s in samples:
            cells = ["" if np.isnan(v) else repr(float(v)) for v in s.x]
            writer.writerow([s.player_id, s.anchor_date.isoformat(), s.label, *cells])

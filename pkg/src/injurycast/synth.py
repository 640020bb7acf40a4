"""Synthetic monitoring cohorts with a known ground-truth injury hazard.

Each feature follows a per-player AR(1) trajectory (player offset + noise)
squashed into a physiological range, so generated data passes ingest
cleaning untouched. The daily injury probability is a logistic function of
the stored feature values' z-scores, which makes the generating hazard
recomputable from the panel: `oracle_risk` shares the exact code path used
during generation and reads values underneath the missingness mask (the
panel deliberately keeps ground truth there).
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError
from .ingest import InjuryEvent, PlayerDay, RAW_NUMERIC_FIELDS
from .panel import FeaturePanel

START_DATE = dt.date(2020, 1, 6)

BODY_PARTS = ("thigh", "knee", "ankle", "hamstring", "calf", "groin")
ACUTE_SHARE = 24 / 43  # acute vs overuse mix


@dataclass(frozen=True)
class SynthFeature:
    """One generated monitoring field: value = clip(center + scale * state)."""

    name: str
    center: float
    scale: float
    weight: float = 0.0  # contribution of the feature's z-score to the hazard logit
    group: str = "objective"  # missingness group: "subjective" | "objective"
    lo: float = -math.inf
    hi: float = math.inf

    def __post_init__(self):
        if self.name not in RAW_NUMERIC_FIELDS:
            raise ConfigError(f"synthetic feature {self.name!r} is not a monitoring field")
        if self.scale <= 0:
            raise ConfigError(f"feature {self.name}: scale must be > 0")
        if self.group not in ("subjective", "objective"):
            raise ConfigError(f"feature {self.name}: unknown group {self.group!r}")


@dataclass(frozen=True)
class HazardSpec:
    # slow AR dynamics + sizable player offsets mirror the within-player
    # consistency of real monitoring data and keep week-scale risk learnable
    features: tuple[SynthFeature, ...]
    base_rate: float = 0.0014
    ar_coef: float = 0.97
    player_offset_sd: float = 1.0
    noise_sd: float = 0.1
    missing_rate_subjective: float = 0.1
    missing_rate_objective: float = 0.05
    seed: int = 0

    def validate(self) -> None:
        if not self.features:
            raise ConfigError("hazard spec needs at least one feature")
        if not 0.0 < self.base_rate < 1.0:
            raise ConfigError(f"base_rate must be in (0, 1), got {self.base_rate}")
        if not 0.0 <= self.ar_coef < 1.0:
            raise ConfigError(f"ar_coef must be in [0, 1), got {self.ar_coef}")
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise ConfigError("duplicate synthetic feature names")
        for rate in (self.missing_rate_subjective, self.missing_rate_objective):
            if not 0.0 <= rate <= 1.0:
                raise ConfigError(f"missingness rates must be in [0, 1], got {rate}")
        groups = {f.group for f in self.features}
        fully_hidden = all(
            (self.missing_rate_subjective if g == "subjective" else self.missing_rate_objective)
            >= 1.0
            for g in groups
        )
        if fully_hidden:
            raise ConfigError("degenerate spec: every feature group is always missing")

    @property
    def state_sd(self) -> float:
        """Stationary SD of the stored state (AR + player offset + noise)."""
        return math.sqrt(1.0 + self.player_offset_sd**2 + self.noise_sd**2)


def default_spec(
    n_hazard: int = 3,
    n_noise: int = 10,
    hazard_weight: float = 1.0,
    base_rate: float = 0.0014,
    seed: int = 0,
    missing_rate_subjective: float = 0.1,
    missing_rate_objective: float = 0.05,
) -> HazardSpec:
    """A physiologically-ranged spec over real monitoring fields.

    The first `n_hazard` of the candidate features drive the hazard with
    `hazard_weight`; the next `n_noise` carry weight 0.
    """
    candidates = [
        SynthFeature("stress", 3.0, 0.7, group="subjective", lo=1, hi=5),
        SynthFeature("soreness", 3.0, 0.7, group="subjective", lo=1, hi=5),
        SynthFeature("srpe", 350.0, 120.0, lo=0, hi=2000),
        SynthFeature("fatigue", 3.0, 0.7, group="subjective", lo=1, hi=5),
        SynthFeature("mood", 3.5, 0.6, group="subjective", lo=1, hi=5),
        SynthFeature("readiness", 6.0, 1.2, group="subjective", lo=0, hi=10),
        SynthFeature("sleep_duration", 7.5, 0.8, group="subjective", lo=4, hi=11),
        SynthFeature("rpe", 5.0, 1.2, lo=0, hi=10),
        SynthFeature("duration_obj", 75.0, 18.0, lo=10, hi=190),
        SynthFeature("speed_km_h_mean", 7.0, 1.0, lo=2, hi=12),
        SynthFeature("speed_km_h_max", 26.0, 1.5, lo=16, hi=31.9),
        SynthFeature("speed_km_h_std", 2.5, 0.5, lo=0.5, hi=6),
        SynthFeature("distance", 8.0, 1.6, lo=1, hi=15.9),
    ]
    total = n_hazard + n_noise
    if not 1 <= total <= len(candidates):
        raise ConfigError(f"can generate 1..{len(candidates)} features, asked for {total}")
    chosen = []
    for i, feat in enumerate(candidates[:total]):
        weight = hazard_weight if i < n_hazard else 0.0
        chosen.append(
            SynthFeature(
                feat.name, feat.center, feat.scale, weight=weight, group=feat.group,
                lo=feat.lo, hi=feat.hi,
            )
        )
    return HazardSpec(
        features=tuple(chosen),
        base_rate=base_rate,
        seed=seed,
        missing_rate_subjective=missing_rate_subjective,
        missing_rate_objective=missing_rate_objective,
    )


def hazard_from_values(spec: HazardSpec, values: np.ndarray) -> np.ndarray:
    """Daily injury probability from stored feature values (..., features).

    This is the one code path used both while generating and by the
    oracle, feature-sequential so results are bit-identical regardless of
    array shape.
    """
    logit = np.full(values.shape[:-1], math.log(spec.base_rate / (1.0 - spec.base_rate)))
    sd = spec.state_sd
    for f, feat in enumerate(spec.features):
        if feat.weight == 0.0:
            continue
        z = (values[..., f] - feat.center) / (feat.scale * sd)
        logit = logit + feat.weight * z
    return 1.0 / (1.0 + np.exp(-logit))


def generate(
    n_players: int, n_days: int, spec: HazardSpec
) -> tuple[FeaturePanel, list[InjuryEvent]]:
    """Simulate a cohort: feature panel with injected missingness + injuries.

    Values under masked cells are kept (ground truth for the oracle); CSV
    exports only ever write observed cells.
    """
    spec.validate()
    if n_players < 2:
        raise ConfigError("need at least 2 players (teammate-relative imputation)")
    if n_days < 1:
        raise ConfigError("need at least 1 day")
    rng = np.random.default_rng(spec.seed)
    n_feat = len(spec.features)

    offsets = rng.normal(0.0, spec.player_offset_sd, (n_players, 1, n_feat))
    innovations = rng.normal(0.0, 1.0, (n_players, n_days, n_feat))
    states = np.empty((n_players, n_days, n_feat))
    states[:, 0, :] = innovations[:, 0, :]
    carry = math.sqrt(1.0 - spec.ar_coef**2)
    for d in range(1, n_days):
        states[:, d, :] = spec.ar_coef * states[:, d - 1, :] + carry * innovations[:, d, :]
    raw = states + offsets + spec.noise_sd * rng.normal(0.0, 1.0, states.shape)

    values = np.empty_like(raw)
    for f, feat in enumerate(spec.features):
        values[:, :, f] = np.clip(feat.center + feat.scale * raw[:, :, f], feat.lo, feat.hi)

    hazard = hazard_from_values(spec, values)
    injured = rng.random((n_players, n_days)) < hazard

    subj = np.array([f.group == "subjective" for f in spec.features])
    hide_subj = rng.random((n_players, n_days)) < spec.missing_rate_subjective
    hide_obj = rng.random((n_players, n_days)) < spec.missing_rate_objective
    mask = np.ones_like(values, dtype=bool)
    mask[:, :, subj] &= ~hide_subj[:, :, np.newaxis]
    mask[:, :, ~subj] &= ~hide_obj[:, :, np.newaxis]

    players = [f"p{i:02d}" for i in range(n_players)]
    panel = FeaturePanel(
        feature_names=[f.name for f in spec.features],
        players=players,
        start_date=START_DATE,
        values=values,
        mask=mask,
        obs_start={p: START_DATE for p in players},
        obs_end={p: START_DATE + dt.timedelta(days=n_days - 1) for p in players},
    )

    injuries: list[InjuryEvent] = []
    for p, player in enumerate(players):
        for d in np.flatnonzero(injured[p]):
            injuries.append(
                InjuryEvent(
                    player_id=player,
                    date=START_DATE + dt.timedelta(days=int(d)),
                    injury_type="acute" if rng.random() < ACUTE_SHARE else "overuse",
                    body_part=BODY_PARTS[int(rng.integers(0, len(BODY_PARTS)))],
                )
            )
    injuries.sort(key=lambda e: (e.player_id, e.date))
    return panel, injuries


def _feature_columns(spec: HazardSpec, panel: FeaturePanel) -> list[int]:
    try:
        return [panel.feature_index(f.name) for f in spec.features]
    except DataError as exc:
        raise DataError(f"panel does not carry the spec's features: {exc}") from exc


def oracle_risk(spec: HazardSpec, panel: FeaturePanel, player: str, date: dt.date) -> float:
    """The generating daily injury probability (reads under the mask)."""
    cols = _feature_columns(spec, panel)
    p = panel.player_index(player)
    d = panel.date_index(date)
    return float(hazard_from_values(spec, panel.values[p, d, cols]))


def oracle_horizon_risk(
    spec: HazardSpec, panel: FeaturePanel, player: str, date: dt.date, horizon: int = 7
) -> float:
    """Ground-truth probability of an injury within (date, date + horizon]."""
    cols = _feature_columns(spec, panel)
    p = panel.player_index(player)
    d = panel.date_index(date)
    survive = 1.0
    for k in range(1, horizon + 1):
        if d + k >= panel.n_days:
            break
        h = float(hazard_from_values(spec, panel.values[p, d + k, cols]))
        survive *= 1.0 - h
    return 1.0 - survive


def panel_to_records(panel: FeaturePanel) -> list[PlayerDay]:
    """Observed cells as monitoring records, one row per in-range day.

    Fully-missing days still produce a (player, date) row so the
    observation range survives a CSV round trip.
    """
    unknown = [n for n in panel.feature_names if n not in RAW_NUMERIC_FIELDS]
    if unknown:
        raise DataError(f"panel has non-monitoring columns, cannot export: {unknown}")
    records: list[PlayerDay] = []
    for p, player in enumerate(panel.players):
        lo, hi = panel.obs_range_idx(player)
        for d in range(lo, hi + 1):
            fields_present = {
                name: float(panel.values[p, d, f])
                for f, name in enumerate(panel.feature_names)
                if panel.mask[p, d, f]
            }
            records.append(
                PlayerDay(
                    player_id=player,
                    date=panel.start_date + dt.timedelta(days=d),
                    **fields_present,
                )
            )
    return records

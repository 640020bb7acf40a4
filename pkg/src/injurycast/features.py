"""Daily aggregation and derived training-load features.

All windowed statistics run over a player's observation range on a daily
calendar. Missing days inside the range are rest days and contribute zero
load to windows; days outside the range never produce values. Load series
passed to the single-series helpers use NaN for missing and start at the
player's first observed day (index 0).
"""

from __future__ import annotations

import datetime as dt
import math
from collections import defaultdict

import numpy as np

from .errors import DataError
from .ingest import (
    RAW_NUMERIC_FIELDS,
    WELLNESS_FIELDS,
    InjuryEvent,
    PlayerDay,
)
from .panel import FeaturePanel

# Aggregation of several same-day sessions into one daily value.
SUM_FIELDS = {
    "srpe",
    "duration_subj",
    "duration_obj",
    "sp_lir_t",
    "sp_lir_d",
    "sp_mir_t",
    "sp_mir_d",
    "sp_hir_t",
    "sp_hir_d",
    "sp_spr_t",
    "sp_spr_d",
    "distance",
}
MAX_FIELDS = {"speed_km_h_max"}
# everything else (intensities, proportions, wellness scores): mean

DERIVED_FEATURES = (
    "daily_load",
    "atl",
    "weekly_load",
    "monotony",
    "strain",
    "acwr",
    "ctl28",
    "ctl42",
    "past_injury_count",
    "subjective_missingness_7d",
)


# -- single-series operations (index 0 = first observed day) ---------------


def daily_load(sessions_on_day: list[PlayerDay]) -> float | None:
    """Sum of the day's session loads (srpe); None when no session has one."""
    loads = [s.srpe for s in sessions_on_day if s.srpe is not None]
    if not loads:
        return None
    keys = {(s.player_id, s.date) for s in sessions_on_day}
    if len(keys) > 1:
        raise DataError(f"sessions span several player-days: {sorted(keys)}")
    return float(sum(loads))


def _window(loads: np.ndarray, day: int, width: int) -> np.ndarray:
    return loads[max(0, day - width + 1) : day + 1]


def atl(loads: np.ndarray, day: int) -> float:
    """Trailing 7-day mean load, rest days counting 0; NaN without any session."""
    w = _window(loads, day, 7)
    defined = ~np.isnan(w)
    if not defined.any():
        return math.nan
    return float(np.sum(w[defined]) / 7.0)


def weekly_load(loads: np.ndarray, day: int) -> float:
    """Trailing 7-day load sum, rest days counting 0."""
    w = _window(loads, day, 7)
    return float(np.nansum(w))


def monotony(loads: np.ndarray, day: int) -> float:
    """mean/SD of the trailing week's daily loads (sample SD, rest = 0).

    Needs the full 7-day window inside the observation range; a zero SD
    (perfectly uniform week) yields NaN rather than infinity.
    """
    if day < 6:
        return math.nan
    w = np.nan_to_num(_window(loads, day, 7), nan=0.0)
    mean = float(np.mean(w))
    sd = float(np.std(w, ddof=1))
    if sd == 0.0:
        return math.nan
    return mean / sd


def strain(loads: np.ndarray, day: int) -> float:
    """Weekly load times monotony; NaN whenever monotony is undefined."""
    m = monotony(loads, day)
    if math.isnan(m):
        return math.nan
    return weekly_load(loads, day) * m


def ctl(loads: np.ndarray, day: int, window: int) -> float:
    """Chronic training load: trailing `window`-day load sum, rest = 0."""
    if window not in (28, 42):
        raise DataError(f"ctl window must be 28 or 42, got {window}")
    return float(np.nansum(_window(loads, day, window)))


def acwr(loads: np.ndarray, day: int) -> float:
    """Acute (7-day mean) over chronic (coupled 28-day mean) load ratio."""
    chronic = ctl(loads, day, 28) / 28.0
    if chronic == 0.0:
        return math.nan
    acute = weekly_load(loads, day) / 7.0
    return acute / chronic


def past_injury_count(injuries: list[InjuryEvent], player: str, date: dt.date) -> int:
    """Number of the player's injuries strictly before `date`."""
    return sum(1 for e in injuries if e.player_id == player and e.date < date)


def subjective_missingness_7d(panel: FeaturePanel, player: str, date: dt.date) -> float:
    """Fraction of the trailing 7 in-range days with the questionnaire fully skipped.

    A day counts as answered when any wellness field is observed; the window
    is clipped to the player's observation range.
    """
    p = panel.player_index(player)
    d = panel.date_index(date)
    lo, hi = panel.obs_range_idx(player)
    if not lo <= d <= hi:
        return math.nan
    wellness_idx = [panel.feature_index(f) for f in WELLNESS_FIELDS if f in panel.feature_names]
    if not wellness_idx:
        return math.nan
    start = max(lo, d - 6)
    answered = panel.mask[p, start : d + 1, :][:, wellness_idx].any(axis=1)
    return float(np.sum(~answered) / answered.size)


# -- panel construction -----------------------------------------------------


def build_raw_panel(records: list[PlayerDay]) -> FeaturePanel:
    """Aggregate per-session records into one row per player-day.

    Additive quantities (loads, durations, distances, zone times) are
    summed, peak speed takes the max, and intensities/scores are averaged.
    """
    if not records:
        raise DataError("no monitoring records to build a panel from")
    by_day: dict[tuple[str, dt.date], list[PlayerDay]] = defaultdict(list)
    for rec in records:
        by_day[(rec.player_id, rec.date)].append(rec)
    players = sorted({r.player_id for r in records})
    obs_start = {p: min(r.date for r in records if r.player_id == p) for p in players}
    obs_end = {p: max(r.date for r in records if r.player_id == p) for p in players}
    start = min(obs_start.values())
    n_days = (max(obs_end.values()) - start).days + 1
    values = np.zeros((len(players), n_days, len(RAW_NUMERIC_FIELDS)))
    mask = np.zeros_like(values, dtype=bool)
    pidx = {p: i for i, p in enumerate(players)}
    for (player, date), sessions in by_day.items():
        p = pidx[player]
        d = (date - start).days
        for f, name in enumerate(RAW_NUMERIC_FIELDS):
            present = [getattr(s, name) for s in sessions if getattr(s, name) is not None]
            if not present:
                continue
            if name in SUM_FIELDS:
                agg = sum(present)
            elif name in MAX_FIELDS:
                agg = max(present)
            else:
                agg = sum(present) / len(present)
            values[p, d, f] = agg
            mask[p, d, f] = True
    return FeaturePanel(
        feature_names=list(RAW_NUMERIC_FIELDS),
        players=players,
        start_date=start,
        values=values,
        mask=mask,
        obs_start=obs_start,
        obs_end=obs_end,
    )


def derive_features(panel: FeaturePanel, injuries: list[InjuryEvent]) -> FeaturePanel:
    """Append the derived load/history columns to a raw daily panel."""
    if "srpe" not in panel.feature_names:
        raise DataError("panel lacks an srpe column; cannot derive load features")
    for name in DERIVED_FEATURES:
        if name in panel.feature_names:
            raise DataError(f"panel already contains derived feature {name!r}")
    n_new = len(DERIVED_FEATURES)
    new_values = np.zeros((panel.n_players, panel.n_days, n_new))
    new_mask = np.zeros_like(new_values, dtype=bool)
    col = {name: i for i, name in enumerate(DERIVED_FEATURES)}
    srpe_f = panel.feature_index("srpe")
    injuries_by_player: dict[str, list[dt.date]] = defaultdict(list)
    for e in injuries:
        injuries_by_player[e.player_id].append(e.date)
    for dates in injuries_by_player.values():
        dates.sort()

    wellness_idx = [panel.feature_index(f) for f in WELLNESS_FIELDS if f in panel.feature_names]

    for p, player in enumerate(panel.players):
        lo, hi = panel.obs_range_idx(player)
        n = hi - lo + 1
        loads = np.where(panel.mask[p, lo : hi + 1, srpe_f], panel.values[p, lo : hi + 1, srpe_f], np.nan)

        def put(name: str, day: int, value: float) -> None:
            if not math.isnan(value):
                new_values[p, lo + day, col[name]] = value
                new_mask[p, lo + day, col[name]] = True

        inj_days = np.array(
            [(d - panel.start_date).days for d in injuries_by_player.get(player, [])],
            dtype=np.int64,
        )
        for i in range(n):
            if not math.isnan(loads[i]):
                put("daily_load", i, float(loads[i]))
            put("atl", i, atl(loads, i))
            put("weekly_load", i, weekly_load(loads, i))
            put("monotony", i, monotony(loads, i))
            put("strain", i, strain(loads, i))
            put("acwr", i, acwr(loads, i))
            put("ctl28", i, ctl(loads, i, 28))
            put("ctl42", i, ctl(loads, i, 42))
            put("past_injury_count", i, float(np.searchsorted(inj_days, lo + i, side="left")))
            if wellness_idx:
                start = max(lo, lo + i - 6)
                answered = panel.mask[p, start : lo + i + 1, :][:, wellness_idx].any(axis=1)
                put("subjective_missingness_7d", i, float(np.sum(~answered) / answered.size))
    return panel.with_features(list(DERIVED_FEATURES), new_values, new_mask)


def rolling_means(panel: FeaturePanel, window: int) -> FeaturePanel:
    """Trailing per-feature means over observed cells only.

    A cell is defined when at least one observed value falls inside its
    trailing window (clipped to the observation range); window 1 returns an
    identical panel.
    """
    if window < 1:
        raise DataError(f"rolling window must be >= 1, got {window}")
    out = panel.copy()
    vals = np.where(panel.mask, panel.values, 0.0)
    cnts = panel.mask.astype(np.float64)
    csum = np.cumsum(vals, axis=1)
    ccnt = np.cumsum(cnts, axis=1)
    pad = np.zeros((panel.n_players, 1, panel.n_features))
    csum = np.concatenate([pad, csum], axis=1)
    ccnt = np.concatenate([pad, ccnt], axis=1)
    days = np.arange(panel.n_days)
    lo = np.maximum(days - window + 1, 0)
    wsum = csum[:, days + 1, :] - csum[:, lo, :]
    wcnt = ccnt[:, days + 1, :] - ccnt[:, lo, :]
    defined = wcnt > 0
    out.values = np.where(defined, wsum / np.maximum(wcnt, 1.0), 0.0)
    out.mask = defined & panel.in_range_rows()[:, :, np.newaxis]
    out.values[~out.mask] = 0.0
    return out

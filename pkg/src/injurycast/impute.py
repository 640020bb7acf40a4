"""Missing-data strategies for the daily feature panel, plus diagnostics.

Three fillers are provided: per-player medians, a teammate-relative
standing reconstruction, and linear interpolation in calendar time. All of
them write only masked cells inside a player's observation range; observed
values are never modified. `diagnostics` quantifies how much each strategy
distorted the data, and `drop_high_missingness` removes features that stay
mostly empty even after filling.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.stats import ks_2samp

from .errors import DataError
from .ingest import InjuryEvent
from .metrics import pearson_r
from .panel import FeaturePanel


def impute_median(panel: FeaturePanel) -> FeaturePanel:
    """Fill each missing cell with that player's median for the feature.

    Players with zero observations of a feature keep it missing. Medians of
    even-sized samples are the mean of the two middle values.
    """
    out = panel.copy()
    in_range = panel.in_range_rows()
    for p in range(panel.n_players):
        vals = np.where(panel.mask[p], panel.values[p], np.nan)
        observed_any = panel.mask[p].any(axis=0)
        medians = np.full(panel.n_features, np.nan)
        if observed_any.any():
            with np.errstate(all="ignore"):
                medians[observed_any] = np.nanmedian(vals[:, observed_any], axis=0)
        fill = ~panel.mask[p] & in_range[p][:, np.newaxis] & observed_any[np.newaxis, :]
        out.values[p][fill] = np.broadcast_to(medians, vals.shape)[fill]
        out.mask[p][fill] = True
    return out


def impute_linear(panel: FeaturePanel) -> FeaturePanel:
    """Linearly interpolate interior gaps per player and feature.

    Gaps before the first or after the last observation are left missing;
    no extrapolation.
    """
    out = panel.copy()
    days = np.arange(panel.n_days, dtype=np.float64)
    for p in range(panel.n_players):
        for f in range(panel.n_features):
            obs = np.flatnonzero(panel.mask[p, :, f])
            if obs.size < 2:
                continue
            interior = np.zeros(panel.n_days, dtype=bool)
            interior[obs[0] : obs[-1] + 1] = True
            gaps = interior & ~panel.mask[p, :, f]
            if not gaps.any():
                continue
            filled = np.interp(days[gaps], days[obs], panel.values[p, obs, f])
            out.values[p, gaps, f] = filled
            out.mask[p, gaps, f] = True
    return out


def impute_relative_standing(panel: FeaturePanel, window: int = 14) -> FeaturePanel:
    """Reconstruct missing values from the player's standing among teammates.

    The standing is the mean z-score of the player against the same-day
    cross-sectional team distribution (teammates only, population SD) over
    the `window` days preceding the gap; the fill is team mean + standing x
    team SD on the missing day. Cells stay missing unless at least two
    teammates are observed on the missing day and at least one standing
    z-score exists in the window.
    """
    if window < 1:
        raise DataError(f"standing window must be >= 1, got {window}")
    out = panel.copy()
    in_range = panel.in_range_rows()
    for f in range(panel.n_features):
        obs = panel.mask[:, :, f]
        vals = np.where(obs, panel.values[:, :, f], 0.0)
        n_day = obs.sum(axis=0).astype(np.float64)  # observed players per day
        sum_day = vals.sum(axis=0)
        sumsq_day = (vals * vals).sum(axis=0)

        # Leave-one-out z-scores on days where the player is observed and
        # >= 2 teammates are too.
        with np.errstate(invalid="ignore", divide="ignore"):
            m = n_day[np.newaxis, :] - 1.0  # teammates of an observed player
            loo_mean = (sum_day[np.newaxis, :] - vals) / m
            loo_var = (sumsq_day[np.newaxis, :] - vals * vals) / m - loo_mean**2
            loo_sd = np.sqrt(np.maximum(loo_var, 0.0))
            z = (vals - loo_mean) / loo_sd
        z_valid = obs & (n_day[np.newaxis, :] >= 3.0) & (loo_sd > 0.0)
        z = np.where(z_valid, z, 0.0)

        # Trailing-window mean of z over the days strictly before each day.
        zc = np.concatenate([np.zeros((panel.n_players, 1)), np.cumsum(z, axis=1)], axis=1)
        cc = np.concatenate(
            [np.zeros((panel.n_players, 1)), np.cumsum(z_valid, axis=1)], axis=1
        )
        days = np.arange(panel.n_days)
        lo = np.maximum(days - window, 0)
        wsum = zc[:, days] - zc[:, lo]
        wcnt = cc[:, days] - cc[:, lo]
        has_standing = wcnt > 0
        standing = np.where(has_standing, wsum / np.maximum(wcnt, 1.0), 0.0)

        # Team stats on candidate fill days (target player unobserved there,
        # so the day stats already exclude them).
        with np.errstate(invalid="ignore", divide="ignore"):
            team_mean = sum_day / n_day
            team_var = sumsq_day / n_day - team_mean**2
            team_sd = np.sqrt(np.maximum(team_var, 0.0))
        fill = (
            ~obs
            & in_range
            & (n_day[np.newaxis, :] >= 2.0)
            & has_standing
        )
        imputed = team_mean[np.newaxis, :] + standing * team_sd[np.newaxis, :]
        out.values[:, :, f][fill] = imputed[fill]
        out.mask[:, :, f][fill] = True
    return out


IMPUTERS = {
    "median": impute_median,
    "bespoke": impute_relative_standing,
    "linear": impute_linear,
    "none": lambda panel: panel.copy(),
}


@dataclass
class FeatureDiagnostics:
    feature: str
    missing_before: float
    missing_after: float
    ks_distance: float | None
    injury_corr_before: float | None
    injury_corr_after: float | None


@dataclass
class ImputationDiagnostics:
    rows: list[FeatureDiagnostics]

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                [
                    "feature",
                    "missing_before",
                    "missing_after",
                    "ks_distance",
                    "injury_corr_before",
                    "injury_corr_after",
                ]
            )
            for r in self.rows:
                writer.writerow(
                    [
                        r.feature,
                        repr(r.missing_before),
                        repr(r.missing_after),
                        "" if r.ks_distance is None else repr(r.ks_distance),
                        "" if r.injury_corr_before is None else repr(r.injury_corr_before),
                        "" if r.injury_corr_after is None else repr(r.injury_corr_after),
                    ]
                )


def _next_day_injury_labels(panel: FeaturePanel, injuries: list[InjuryEvent]) -> np.ndarray:
    """(players, days) 0/1 matrix: an injury is recorded on the next day."""
    labels = np.zeros((panel.n_players, panel.n_days))
    for e in injuries:
        if e.player_id not in panel.players:
            continue
        p = panel.player_index(e.player_id)
        d = (e.date - panel.start_date).days - 1  # the day before the injury
        if 0 <= d < panel.n_days:
            labels[p, d] = 1.0
    return labels


def diagnostics(
    before: FeaturePanel, after: FeaturePanel, injuries: list[InjuryEvent]
) -> ImputationDiagnostics:
    """Distribution shift and association checks per feature.

    KS distance compares observed values with the post-imputation pooled
    values; the correlations pair feature values with next-day injury.
    """
    if before.feature_names != after.feature_names or before.players != after.players:
        raise DataError("before/after panels are not aligned")
    in_range = before.in_range_rows()
    labels = _next_day_injury_labels(before, injuries)
    rows: list[FeatureDiagnostics] = []
    n_cells = float(in_range.sum())
    for f, name in enumerate(before.feature_names):
        obs_b = before.mask[:, :, f] & in_range
        obs_a = after.mask[:, :, f] & in_range
        missing_before = 1.0 - obs_b.sum() / n_cells
        missing_after = 1.0 - obs_a.sum() / n_cells
        vals_b = before.values[:, :, f][obs_b]
        vals_a = after.values[:, :, f][obs_a]
        if vals_b.size > 0 and vals_a.size > 0:
            ks = float(ks_2samp(vals_b, vals_a, method="asymp").statistic)
        else:
            ks = None
        corr_b = pearson_r(vals_b, labels[obs_b]) if vals_b.size else None
        corr_a = pearson_r(vals_a, labels[obs_a]) if vals_a.size else None
        rows.append(
            FeatureDiagnostics(
                feature=name,
                missing_before=float(missing_before),
                missing_after=float(missing_after),
                ks_distance=ks,
                injury_corr_before=corr_b,
                injury_corr_after=corr_a,
            )
        )
    return ImputationDiagnostics(rows=rows)


def drop_high_missingness(
    panel: FeaturePanel, threshold: float = 0.5
) -> tuple[FeaturePanel, list[str]]:
    """Drop features whose in-range missing fraction exceeds `threshold`."""
    if not 0.0 <= threshold <= 1.0:
        raise DataError(f"missingness threshold must be in [0, 1], got {threshold}")
    in_range = panel.in_range_rows()
    n_cells = float(in_range.sum())
    kept: list[str] = []
    dropped: list[str] = []
    for f, name in enumerate(panel.feature_names):
        missing = 1.0 - (panel.mask[:, :, f] & in_range).sum() / n_cells
        (dropped if missing > threshold else kept).append(name)
    return panel.select_features(kept), dropped

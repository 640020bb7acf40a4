"""Survival and binary evaluation metrics.

Incomputable statistics (no comparable pairs, one-class AUC, degenerate
correlations) are reported as None flags, never silently coerced to a
number.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from . import kernels
from .errors import DataError
from .panel import FeaturePanel

# GNSS-derived columns; a day with any of these observed counts as a
# tracked session.
OBJECTIVE_FIELDS = (
    "duration_obj",
    "speed_km_h_mean",
    "speed_km_h_max",
    "speed_km_h_std",
    "sp_lir_p",
    "sp_lir_t",
    "sp_lir_d",
    "sp_mir_p",
    "sp_mir_t",
    "sp_mir_d",
    "sp_hir_p",
    "sp_hir_t",
    "sp_hir_d",
    "sp_spr_p",
    "sp_spr_t",
    "sp_spr_d",
    "distance",
    "distance_per_min",
)


def c_index(scores: Sequence[float], times: Sequence[int], events: Sequence[int]) -> float | None:
    """Harrell's concordance for right-censored discrete times.

    Comparable pairs are (i, j) with t_i < t_j and event_i = 1; score ties
    credit 0.5. Returns None when no pair is comparable.
    """
    scores = np.asarray(scores, dtype=np.float64)
    times = np.asarray(times, dtype=np.int64)
    events = np.asarray(events, dtype=np.int64)
    if not scores.shape == times.shape == events.shape:
        raise DataError("c_index inputs must have equal lengths")
    concordant, tied, comparable = kernels.concordance_counts(scores, times, events)
    if comparable == 0:
        return None
    return (concordant + 0.5 * tied) / comparable


def _average_ranks(x: np.ndarray) -> np.ndarray:
    order = np.argsort(x, kind="mergesort")
    sorted_x = x[order]
    ranks = np.empty(x.size, dtype=np.float64)
    i = 0
    while i < x.size:
        j = i
        while j + 1 < x.size and sorted_x[j + 1] == sorted_x[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j + 2) / 2.0  # 1-based average rank
        i = j + 1
    return ranks


def binary_metrics(
    probas: Sequence[float], labels: Sequence[int], threshold: float = 0.5
) -> dict[str, float | None]:
    """F1 / precision / recall at `threshold` plus rank-based AUC.

    Precision is None when nothing is predicted positive; AUC is None when
    only one class is present. Tied scores get tie-corrected (average-rank)
    AUC credit.
    """
    probas = np.asarray(probas, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if probas.shape != labels.shape or probas.size == 0:
        raise DataError("binary_metrics inputs must be equal-length and nonempty")
    pred = probas >= threshold
    pos = labels == 1
    tp = int(np.sum(pred & pos))
    fp = int(np.sum(pred & ~pos))
    fn = int(np.sum(~pred & pos))
    precision = tp / (tp + fp) if (tp + fp) > 0 else None
    recall = tp / (tp + fn) if (tp + fn) > 0 else None
    f1 = 2 * tp / (2 * tp + fp + fn) if (2 * tp + fp + fn) > 0 else None
    n_pos = int(pos.sum())
    n_neg = int(probas.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        auc = None
    else:
        ranks = _average_ranks(probas)
        auc = (float(ranks[pos].sum()) - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)
    return {"f1": f1, "precision": precision, "recall": recall, "auc": auc}


def pearson_r(x: Sequence[float], y: Sequence[float]) -> float | None:
    """Pearson correlation; None for degenerate inputs (n < 2 or zero variance)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise DataError("pearson_r inputs must have equal lengths")
    if x.size < 2:
        return None
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(np.sum(dx * dx))
    syy = float(np.sum(dy * dy))
    if sxx == 0.0 or syy == 0.0:
        return None
    return float(np.sum(dx * dy) / np.sqrt(sxx * syy))


def iqr(values: Sequence[float]) -> float:
    values = np.asarray(values, dtype=np.float64)
    q1, q3 = np.percentile(values, [25.0, 75.0])
    return float(q3 - q1)


def sessions_tracked(panel: FeaturePanel) -> dict[str, int]:
    """Per player: in-range days with any objective (GNSS) field observed."""
    idx = [panel.feature_index(f) for f in OBJECTIVE_FIELDS if f in panel.feature_names]
    counts: dict[str, int] = {}
    for p, player in enumerate(panel.players):
        lo, hi = panel.obs_range_idx(player)
        if idx:
            counts[player] = int(panel.mask[p, lo : hi + 1, :][:, idx].any(axis=1).sum())
        else:
            counts[player] = 0
    return counts


@dataclass
class LopoPlayerResult:
    player_id: str
    c_index: float | None
    n_samples: int
    n_sessions_tracked: int
    n_injuries: int


@dataclass
class LopoReport:
    """Per-player held-out concordance plus the cross-player aggregates."""

    rows: list[LopoPlayerResult]
    median_c: float | None
    iqr_c: float | None
    r_vs_sessions: float | None
    r_vs_injuries: float | None

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["player_id", "c_index", "n_samples", "n_sessions_tracked", "n_injuries"]
            )
            for r in self.rows:
                writer.writerow(
                    [
                        r.player_id,
                        "" if r.c_index is None else repr(r.c_index),
                        r.n_samples,
                        r.n_sessions_tracked,
                        r.n_injuries,
                    ]
                )

    def to_dict(self) -> dict:
        return {
            "median_c_index": self.median_c,
            "iqr_c_index": self.iqr_c,
            "r_vs_sessions_tracked": self.r_vs_sessions,
            "r_vs_injury_count": self.r_vs_injuries,
            "players": [
                {
                    "player_id": r.player_id,
                    "c_index": r.c_index,
                    "n_samples": r.n_samples,
                    "n_sessions_tracked": r.n_sessions_tracked,
                    "n_injuries": r.n_injuries,
                }
                for r in self.rows
            ],
        }


def lopo_evaluate(
    folds: Sequence[tuple[list, list]],
    fit_predict: Callable[[list, list], np.ndarray],
    sessions: Mapping[str, int],
    injury_counts: Mapping[str, int],
) -> LopoReport:
    """Train per fold, score the held-out player, aggregate across players.

    `fit_predict(train, test)` must return one risk score per test sample.
    Players whose held-out concordance is incomputable stay in the table
    flagged None but are excluded from the aggregates and correlations.
    """
    rows: list[LopoPlayerResult] = []
    for train, test in folds:
        players = {s.player_id for s in test}
        if len(players) != 1:
            raise DataError(f"LOPO fold holds {len(players)} players, expected 1")
        player = players.pop()
        scores = np.asarray(fit_predict(train, test), dtype=np.float64)
        c = c_index(scores, [s.time_to_event for s in test], [s.event for s in test])
        rows.append(
            LopoPlayerResult(
                player_id=player,
                c_index=c,
                n_samples=len(test),
                n_sessions_tracked=int(sessions.get(player, 0)),
                n_injuries=int(injury_counts.get(player, 0)),
            )
        )
    rows.sort(key=lambda r: r.player_id)
    usable = [r for r in rows if r.c_index is not None]
    cs = [r.c_index for r in usable]
    return LopoReport(
        rows=rows,
        median_c=float(np.median(cs)) if usable else None,
        iqr_c=iqr(cs) if usable else None,
        r_vs_sessions=pearson_r(cs, [r.n_sessions_tracked for r in usable]) if usable else None,
        r_vs_injuries=pearson_r(cs, [r.n_injuries for r in usable]) if usable else None,
    )


def injury_counts_by_player(injuries, players: Sequence[str]) -> dict[str, int]:
    counts = {p: 0 for p in players}
    for e in injuries:
        if e.player_id in counts:
            counts[e.player_id] += 1
    return counts

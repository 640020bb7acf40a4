"""The player x day x feature panel shared by every pipeline stage.

One global, contiguous date axis covers all players; each player also has
an observation range (first to last day with any record). Cells outside a
player's range are always masked. `mask[p, d, f]` is True when the value is
observed/defined; code must consult the mask and never rely on what the
values array holds under masked cells (the synthetic generator deliberately
keeps ground truth there).
"""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError

ONE_DAY = dt.timedelta(days=1)


@dataclass
class FeaturePanel:
    feature_names: list[str]
    players: list[str]
    start_date: dt.date
    values: np.ndarray  # (n_players, n_days, n_features) float64
    mask: np.ndarray  # same shape, bool
    obs_start: dict[str, dt.date]
    obs_end: dict[str, dt.date]
    _player_idx: dict[str, int] = field(init=False, repr=False)
    _feature_idx: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        if len(set(self.feature_names)) != len(self.feature_names):
            raise DataError("panel feature names are not unique")
        if len(set(self.players)) != len(self.players):
            raise DataError("panel player ids are not unique")
        expected = (len(self.players), self.n_days, len(self.feature_names))
        if self.values.shape != expected or self.mask.shape != expected:
            raise DataError(
                f"panel shape mismatch: values {self.values.shape}, mask {self.mask.shape}"
            )
        self._player_idx = {p: i for i, p in enumerate(self.players)}
        self._feature_idx = {f: i for i, f in enumerate(self.feature_names)}

    # -- axis helpers ------------------------------------------------------

    @property
    def n_days(self) -> int:
        return self.values.shape[1]

    @property
    def n_players(self) -> int:
        return len(self.players)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    @property
    def dates(self) -> list[dt.date]:
        return [self.start_date + dt.timedelta(days=i) for i in range(self.n_days)]

    def date_index(self, date: dt.date) -> int:
        i = (date - self.start_date).days
        if not 0 <= i < self.n_days:
            raise DataError(f"date {date} outside panel range")
        return i

    def player_index(self, player: str) -> int:
        try:
            return self._player_idx[player]
        except KeyError:
            raise DataError(f"unknown player {player!r}") from None

    def feature_index(self, name: str) -> int:
        try:
            return self._feature_idx[name]
        except KeyError:
            raise DataError(f"unknown feature {name!r}") from None

    def obs_range_idx(self, player: str) -> tuple[int, int]:
        """(first, last) day index of the player's observation range, inclusive."""
        return (
            self.date_index(self.obs_start[player]),
            self.date_index(self.obs_end[player]),
        )

    def in_range_rows(self) -> np.ndarray:
        """Boolean (players, days): True inside each player's observation range."""
        rows = np.zeros((self.n_players, self.n_days), dtype=bool)
        for p, player in enumerate(self.players):
            lo, hi = self.obs_range_idx(player)
            rows[p, lo : hi + 1] = True
        return rows

    # -- construction ------------------------------------------------------

    def copy(self) -> "FeaturePanel":
        return FeaturePanel(
            feature_names=list(self.feature_names),
            players=list(self.players),
            start_date=self.start_date,
            values=self.values.copy(),
            mask=self.mask.copy(),
            obs_start=dict(self.obs_start),
            obs_end=dict(self.obs_end),
        )

    def with_features(self, names: list[str], values: np.ndarray, mask: np.ndarray) -> "FeaturePanel":
        """New panel with extra feature columns appended."""
        return FeaturePanel(
            feature_names=self.feature_names + names,
            players=list(self.players),
            start_date=self.start_date,
            values=np.concatenate([self.values, values], axis=2),
            mask=np.concatenate([self.mask, mask], axis=2),
            obs_start=dict(self.obs_start),
            obs_end=dict(self.obs_end),
        )

    def select_features(self, names: list[str]) -> "FeaturePanel":
        idx = [self.feature_index(n) for n in names]
        return FeaturePanel(
            feature_names=list(names),
            players=list(self.players),
            start_date=self.start_date,
            values=self.values[:, :, idx].copy(),
            mask=self.mask[:, :, idx].copy(),
            obs_start=dict(self.obs_start),
            obs_end=dict(self.obs_end),
        )

    def masked_values(self) -> np.ndarray:
        """Values with NaN wherever the mask is False (a safe read-only view)."""
        return np.where(self.mask, self.values, np.nan)

    # -- CSV round trip ----------------------------------------------------

    def to_csv(self, path: str | Path) -> None:
        """Wide CSV: one row per in-range player-day, empty cell = missing."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["player_id", "date", *self.feature_names])
            for p, player in enumerate(self.players):
                lo, hi = self.obs_range_idx(player)
                for d in range(lo, hi + 1):
                    date = self.start_date + dt.timedelta(days=d)
                    row = [player, date.isoformat()]
                    for f in range(self.n_features):
                        row.append(repr(float(self.values[p, d, f])) if self.mask[p, d, f] else "")
                    writer.writerow(row)

    @classmethod
    def from_csv(cls, path: str | Path) -> "FeaturePanel":
        path = Path(path)
        if not path.exists():
            raise DataError(f"panel file not found: {path}")
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if not header or header[:2] != ["player_id", "date"]:
                raise DataError("panel CSV must start with player_id,date columns")
            feature_names = header[2:]
            rows: list[tuple[str, dt.date, list[str]]] = []
            for raw in reader:
                rows.append((raw[0], dt.date.fromisoformat(raw[1]), raw[2:]))
        if not rows:
            raise DataError("panel CSV has no rows")
        players = sorted({r[0] for r in rows})
        all_dates = [r[1] for r in rows]
        start, end = min(all_dates), max(all_dates)
        n_days = (end - start).days + 1
        values = np.zeros((len(players), n_days, len(feature_names)))
        mask = np.zeros_like(values, dtype=bool)
        obs_start: dict[str, dt.date] = {}
        obs_end: dict[str, dt.date] = {}
        pidx = {p: i for i, p in enumerate(players)}
        for player, date, cells in rows:
            p = pidx[player]
            d = (date - start).days
            obs_start[player] = min(obs_start.get(player, date), date)
            obs_end[player] = max(obs_end.get(player, date), date)
            for f, cell in enumerate(cells):
                if cell != "":
                    values[p, d, f] = float(cell)
                    mask[p, d, f] = True
        return cls(
            feature_names=feature_names,
            players=players,
            start_date=start,
            values=values,
            mask=mask,
            obs_start=obs_start,
            obs_end=obs_end,
        )

import datetime as dt

import numpy as np
import pytest

from injurycast.ingest import InjuryEvent, PlayerDay
from injurycast.panel import FeaturePanel

START = dt.date(2021, 3, 1)


def day(offset: int) -> dt.date:
    return START + dt.timedelta(days=offset)


def rec(player: str, offset: int, **fields) -> PlayerDay:
    return PlayerDay(player_id=player, date=day(offset), **fields)


def injury(player: str, offset: int, injury_type: str = "acute", body_part: str = "thigh") -> InjuryEvent:
    return InjuryEvent(player_id=player, date=day(offset), injury_type=injury_type, body_part=body_part)


def make_panel(
    data: dict[str, dict[int, dict[str, float]]],
    feature_names: list[str],
    n_days: int | None = None,
) -> FeaturePanel:
    """Hand-built panel: data[player][day_offset][feature] = value.

    Every player's observation range spans the full day axis.
    """
    players = sorted(data)
    if n_days is None:
        n_days = max((d for per in data.values() for d in per), default=0) + 1
    values = np.zeros((len(players), n_days, len(feature_names)))
    mask = np.zeros_like(values, dtype=bool)
    fidx = {f: i for i, f in enumerate(feature_names)}
    for p, player in enumerate(players):
        for d, cells in data[player].items():
            for name, value in cells.items():
                values[p, d, fidx[name]] = value
                mask[p, d, fidx[name]] = True
    return FeaturePanel(
        feature_names=list(feature_names),
        players=players,
        start_date=START,
        values=values,
        mask=mask,
        obs_start={p: START for p in players},
        obs_end={p: day(n_days - 1) for p in players},
    )


def random_panel(
    rng: np.random.Generator,
    n_players: int = 4,
    n_days: int = 30,
    n_features: int = 3,
    missing: float = 0.3,
) -> FeaturePanel:
    players = [f"p{i}" for i in range(n_players)]
    values = rng.normal(10.0, 3.0, (n_players, n_days, n_features))
    mask = rng.random((n_players, n_days, n_features)) >= missing
    values[~mask] = 0.0
    return FeaturePanel(
        feature_names=[f"feat{i}" for i in range(n_features)],
        players=players,
        start_date=START,
        values=values,
        mask=mask,
        obs_start={p: START for p in players},
        obs_end={p: day(n_days - 1) for p in players},
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)

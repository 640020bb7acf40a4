"""Kernel-based Shapley attribution of the horizon risk score.

Missing-feature marginalisation replaces unselected coordinates with
background rows and averages. Up to 12 features every coalition is
enumerated and the Shapley sum is exact; beyond that a paired coalition
sample is solved by constrained weighted least squares, which preserves
local accuracy (base value plus contributions equals the prediction)
by construction.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .cohort import _anchor_features, transform_x
from .deephit import DeepHitModel
from .errors import ConfigError, DataError
from .panel import FeaturePanel

EXACT_LIMIT = 12
_EVAL_CHUNK = 128  # coalitions scored per batched model call


@dataclass
class Attribution:
    base_value: float
    phi: np.ndarray
    prediction: float
    player_id: str | None = None
    date: dt.date | None = None
    feature_names: list[str] | None = None

    def to_dict(self) -> dict:
        return {
            "player_id": self.player_id,
            "date": None if self.date is None else self.date.isoformat(),
            "base_value": self.base_value,
            "prediction": self.prediction,
            "phi": self.phi.tolist(),
            "feature_names": self.feature_names,
        }


def _coalition_values(
    score_fn: Callable[[np.ndarray], np.ndarray],
    x: np.ndarray,
    background: np.ndarray,
    masks: np.ndarray,
) -> np.ndarray:
    """v(S) per coalition row: mean score with unselected features drawn
    from the background."""
    n_bg = background.shape[0]
    values = np.empty(masks.shape[0])
    for start in range(0, masks.shape[0], _EVAL_CHUNK):
        block = masks[start : start + _EVAL_CHUNK]
        mixed = np.where(
            block[:, np.newaxis, :], x[np.newaxis, np.newaxis, :], background[np.newaxis, :, :]
        )
        flat = mixed.reshape(-1, x.size)
        values[start : start + block.shape[0]] = score_fn(flat).reshape(
            block.shape[0], n_bg
        ).mean(axis=1)
    return values


def _exact_shapley(
    score_fn, x: np.ndarray, background: np.ndarray
) -> tuple[float, np.ndarray, float]:
    m = x.size
    n_subsets = 1 << m
    masks = np.zeros((n_subsets, m), dtype=bool)
    for bit in range(m):
        masks[:, bit] = (np.arange(n_subsets) >> bit) & 1
    values = _coalition_values(score_fn, x, background, masks)
    size_weight = np.array(
        [math.factorial(s) * math.factorial(m - s - 1) / math.factorial(m) for s in range(m)]
    )
    sizes = masks.sum(axis=1)
    phi = np.zeros(m)
    for s in range(n_subsets):
        if sizes[s] >= m:
            continue
        w = size_weight[sizes[s]]
        for bit in range(m):
            if not masks[s, bit]:
                phi[bit] += w * (values[s | (1 << bit)] - values[s])
    return float(values[0]), phi, float(values[-1])


def _sampled_shapley(
    score_fn,
    x: np.ndarray,
    background: np.ndarray,
    n_coalitions: int,
    seed: int,
) -> tuple[float, np.ndarray, float]:
    m = x.size
    rng = np.random.default_rng(seed)
    rows: list[np.ndarray] = []
    # Deterministic start: all singletons and their complements.
    for i in range(m):
        single = np.zeros(m, dtype=bool)
        single[i] = True
        rows.append(single)
        rows.append(~single)
    sizes = np.arange(1, m)
    size_p = (m - 1) / (sizes * (m - sizes))
    size_p = size_p / size_p.sum()
    while len(rows) < max(n_coalitions, 2 * m):
        s = int(rng.choice(sizes, p=size_p))
        members = rng.choice(m, size=s, replace=False)
        z = np.zeros(m, dtype=bool)
        z[members] = True
        rows.append(z)
        rows.append(~z)
    masks = np.array(rows)
    values = _coalition_values(score_fn, x, background, masks)
    v0 = float(score_fn(background).mean())
    fx = float(score_fn(x[np.newaxis, :])[0])
    delta = fx - v0

    z = masks.astype(np.float64)
    s_count = z.sum(axis=1)
    kernel_w = (m - 1) / (s_count * (m - s_count))
    # Enforce sum(phi) = delta by eliminating the last coefficient.
    design = z[:, :-1] - z[:, -1:]
    target = values - v0 - z[:, -1] * delta
    sw = np.sqrt(kernel_w)[:, np.newaxis]
    sol, *_ = np.linalg.lstsq(design * sw, target * sw.ravel(), rcond=None)
    phi = np.empty(m)
    phi[:-1] = sol
    phi[-1] = delta - sol.sum()
    return v0, phi, fx


def kernel_shap(
    score_fn: Callable[[np.ndarray], np.ndarray],
    x: np.ndarray,
    background: Sequence[np.ndarray] | np.ndarray,
    n_coalitions: int = 2048,
    seed: int = 0,
    exact: bool | None = None,
) -> Attribution:
    """Shapley attribution of `score_fn` at `x` against a background sample.

    `exact=None` enumerates every coalition when the vector has at most 12
    features and falls back to paired sampling otherwise.
    """
    x = np.asarray(x, dtype=np.float64)
    background = np.asarray(background, dtype=np.float64)
    if background.ndim == 1:
        background = background[np.newaxis, :]
    if background.size == 0:
        raise ConfigError("kernel_shap needs a nonempty background")
    if background.shape[1] != x.size:
        raise DataError(
            f"background has {background.shape[1]} features, x has {x.size}"
        )
    if exact is None:
        exact = x.size <= EXACT_LIMIT
    if x.size == 1:
        v0 = float(score_fn(background).mean())
        fx = float(score_fn(x[np.newaxis, :])[0])
        return Attribution(base_value=v0, phi=np.array([fx - v0]), prediction=fx)
    if exact:
        v0, phi, fx = _exact_shapley(score_fn, x, background)
    else:
        v0, phi, fx = _sampled_shapley(score_fn, x, background, n_coalitions, seed)
    return Attribution(base_value=v0, phi=phi, prediction=fx)


def _eligible_days(model: DeepHitModel, panel: FeaturePanel, player: str) -> list[int]:
    lo, hi = panel.obs_range_idx(player)
    return list(range(lo + model.lookback - 1, hi + 1))


def _model_vector(model: DeepHitModel, feats: np.ndarray, p: int, d: int) -> np.ndarray:
    x = feats[p, d]
    if model.scaler is not None:
        return transform_x(model.scaler, x)
    return np.where(np.isnan(x), 0.0, x)


def day_explanation(
    model: DeepHitModel,
    panel: FeaturePanel,
    player: str,
    date: dt.date,
    background: np.ndarray,
    n_coalitions: int = 2048,
    seed: int = 0,
) -> Attribution:
    """Per-feature contributions to one player-day's risk score."""
    if model.feature_names is not None and panel.feature_names != model.feature_names:
        raise DataError("panel feature order does not match the model's training features")
    feats = _anchor_features(panel, model.lookback)
    p = panel.player_index(player)
    d = panel.date_index(date)
    if d not in _eligible_days(model, panel, player):
        raise DataError(f"{player} has insufficient look-back history on {date}")
    x = _model_vector(model, feats, p, d)
    att = kernel_shap(model.risk_scores, x, background, n_coalitions=n_coalitions, seed=seed)
    att.player_id = player
    att.date = date
    att.feature_names = list(panel.feature_names)
    return att


def season_importance(
    model: DeepHitModel,
    panel: FeaturePanel,
    player: str,
    background: np.ndarray,
    n_coalitions: int = 2048,
    seed: int = 0,
    max_days: int | None = None,
) -> list[tuple[str, float]]:
    """Mean |phi| per feature over the player's eligible days, ranked.

    `max_days` caps the number of explained days (evenly spaced) to bound
    runtime; ties rank alphabetically.
    """
    if model.feature_names is not None and panel.feature_names != model.feature_names:
        raise DataError("panel feature order does not match the model's training features")
    feats = _anchor_features(panel, model.lookback)
    p = panel.player_index(player)
    days = _eligible_days(model, panel, player)
    if not days:
        raise DataError(f"{player} has no eligible days for attribution")
    if max_days is not None and len(days) > max_days:
        picks = np.linspace(0, len(days) - 1, max_days).round().astype(int)
        days = [days[i] for i in sorted(set(picks.tolist()))]
    total = np.zeros(panel.n_features)
    for d in days:
        x = _model_vector(model, feats, p, d)
        att = kernel_shap(model.risk_scores, x, background, n_coalitions=n_coalitions, seed=seed)
        total += np.abs(att.phi)
    mean_abs = total / len(days)
    ranked = sorted(
        zip(panel.feature_names, mean_abs.tolist()), key=lambda kv: (-kv[1], kv[0])
    )
    return ranked


def top_features(att: Attribution, k: int) -> list[tuple[str, float]]:
    """The k largest |phi| contributions as (name, phi), all when k exceeds them."""
    names = att.feature_names or [f"f{i}" for i in range(att.phi.size)]
    order = np.argsort(-np.abs(att.phi), kind="mergesort")
    return [(names[i], float(att.phi[i])) for i in order[: min(k, att.phi.size)]]

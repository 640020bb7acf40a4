"""Discrete-time survival network: MLP backbone, likelihood + ranking loss.

The head is a (K+1)-way softmax over the K horizon days plus an explicit
beyond-horizon bucket, so censored likelihood 1 - CIF_k is strictly
positive at any parameter setting. Training is plain mini-batch gradient
descent with an exponentially decaying step and early stopping on the
negative log-likelihood of a chronological tail split; all gradients are
hand-derived and checked against finite differences in the test suite.
"""

from __future__ import annotations

import datetime as dt
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .cohort import (
    ScalerStats,
    SurvivalSample,
    _anchor_features,
    survival_arrays,
    transform_x,
)
from .errors import ConfigError, DataError, TrainingError
from .panel import FeaturePanel

EPS = 1e-12

ACTIVATIONS = ("relu", "tanh")


@dataclass(frozen=True)
class MLPConfig:
    # tanh default: with heavy censoring the likelihood gradient drives relu
    # hidden units dead and the network collapses to a constant risk curve
    hidden_layer_widths: tuple[int, ...] = (64, 32)
    activation: str = "tanh"
    dropout_rate: float = 0.1
    weight_init_scale: float = 1.0
    seed: int = 0

    def validate(self) -> None:
        if len(self.hidden_layer_widths) < 1:
            raise ConfigError("need at least one hidden layer")
        if any(w < 1 for w in self.hidden_layer_widths):
            raise ConfigError(f"hidden widths must be >= 1: {self.hidden_layer_widths}")
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"activation must be one of {ACTIVATIONS}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")


@dataclass(frozen=True)
class DeepHitConfig:
    n_bins: int = 7
    alpha_likelihood: float = 1.0
    beta_ranking: float = 1.0
    sigma_ranking: float = 0.1
    learning_rate: float = 0.02
    lr_decay: float = 0.98
    batch_size: int = 64
    epochs: int = 200
    early_stop_patience: int = 10
    # injuries are rare (<5% of anchors); duplicating event rows until they
    # make up this fraction of the censored count keeps the likelihood
    # gradient from being swamped. 0 disables. Fit portion only; inflates
    # absolute pmf calibration but leaves rankings meaningful.
    event_upsample_ratio: float = 0.1
    seed: int = 0

    def validate(self) -> None:
        if self.n_bins < 1:
            raise ConfigError(f"n_bins must be >= 1, got {self.n_bins}")
        if self.alpha_likelihood < 0 or self.beta_ranking < 0:
            raise ConfigError("loss weights must be >= 0")
        if self.alpha_likelihood + self.beta_ranking <= 0:
            raise ConfigError("alpha_likelihood + beta_ranking must be > 0")
        if self.sigma_ranking <= 0:
            raise ConfigError(f"sigma_ranking must be > 0, got {self.sigma_ranking}")
        if self.batch_size < 1 or self.epochs < 0 or self.early_stop_patience < 0:
            raise ConfigError("batch_size/epochs/patience out of range")
        if not 0.0 <= self.event_upsample_ratio <= 1.0:
            raise ConfigError(
                f"event_upsample_ratio must be in [0, 1], got {self.event_upsample_ratio}"
            )


@dataclass
class RiskCurve:
    """Predicted event-time distribution for one player-day.

    pmf has K+1 entries (days 1..K plus beyond-horizon); cif is its running
    sum over the first K bins.
    """

    pmf: np.ndarray
    cif: np.ndarray

    def __post_init__(self):
        if abs(float(self.pmf.sum()) - 1.0) > 1e-6:
            raise DataError(f"pmf sums to {self.pmf.sum()}, not 1")
        if (self.pmf < -1e-12).any():
            raise DataError("pmf has negative mass")
        if (np.diff(self.cif) < -1e-9).any():
            raise DataError("cif must be nondecreasing")
        if self.cif[-1] > 1.0 + 1e-6:
            raise DataError("cif exceeds 1")


def risk_score(curve: RiskCurve) -> float:
    """Scalar ranking score: probability of injury within the horizon."""
    return float(curve.cif[-1])


def _act(z: np.ndarray, kind: str) -> np.ndarray:
    return np.maximum(z, 0.0) if kind == "relu" else np.tanh(z)


def _act_grad(z: np.ndarray, a: np.ndarray, kind: str) -> np.ndarray:
    return (z > 0).astype(np.float64) if kind == "relu" else 1.0 - a * a


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    ez = np.exp(shifted)
    return ez / ez.sum(axis=1, keepdims=True)


def init_params(
    mlp: MLPConfig, input_dim: int, output_dim: int, rng: np.random.Generator
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Gaussian fan-in-scaled weights, zero biases."""
    widths = [input_dim, *mlp.hidden_layer_widths, output_dim]
    weights, biases = [], []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        weights.append(rng.normal(0.0, mlp.weight_init_scale / math.sqrt(fan_in), (fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return weights, biases


@dataclass
class DeepHitModel:
    mlp: MLPConfig
    cfg: DeepHitConfig
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    feature_names: list[str] | None = None
    scaler: ScalerStats | None = None
    lookback: int = 21
    history: list[dict] = field(default_factory=list)

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[0]

    def forward_batch(self, X: np.ndarray, drop_masks: list[np.ndarray] | None = None) -> np.ndarray:
        """Softmax pmf rows for a batch; dropout only when masks are given."""
        if X.ndim != 2 or X.shape[1] != self.input_dim:
            raise DataError(
                f"input has {X.shape[-1] if X.ndim == 2 else '?'} features, model expects {self.input_dim}"
            )
        logits, _ = _forward_cached(self.weights, self.biases, X, self.mlp, drop_masks)
        return _softmax(logits)

    def risk_scores(self, X: np.ndarray) -> np.ndarray:
        """CIF at the horizon (1 - beyond-horizon mass) per row."""
        pmf = self.forward_batch(X)
        return 1.0 - pmf[:, -1]

    def save(self, path: str | Path) -> None:
        payload = {
            "schema_version": 1,
            "kind": "discrete-time-survival-mlp",
            "mlp": {
                "hidden_layer_widths": list(self.mlp.hidden_layer_widths),
                "activation": self.mlp.activation,
                "dropout_rate": self.mlp.dropout_rate,
                "weight_init_scale": self.mlp.weight_init_scale,
                "seed": self.mlp.seed,
            },
            "training": {
                "n_bins": self.cfg.n_bins,
                "alpha_likelihood": self.cfg.alpha_likelihood,
                "beta_ranking": self.cfg.beta_ranking,
                "sigma_ranking": self.cfg.sigma_ranking,
                "learning_rate": self.cfg.learning_rate,
                "lr_decay": self.cfg.lr_decay,
                "batch_size": self.cfg.batch_size,
                "epochs": self.cfg.epochs,
                "early_stop_patience": self.cfg.early_stop_patience,
                "event_upsample_ratio": self.cfg.event_upsample_ratio,
                "seed": self.cfg.seed,
            },
            "lookback": self.lookback,
            "feature_names": self.feature_names,
            "scaler": None
            if self.scaler is None
            else {"mean": self.scaler.mean.tolist(), "sd": self.scaler.sd.tolist()},
            "layers": [
                {"weights": w.tolist(), "bias": b.tolist()}
                for w, b in zip(self.weights, self.biases)
            ],
        }
        Path(path).write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "DeepHitModel":
        try:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"cannot read model checkpoint {path}: {exc}") from exc
        if payload.get("schema_version") != 1:
            raise DataError(f"unsupported checkpoint schema {payload.get('schema_version')}")
        mlp = MLPConfig(
            hidden_layer_widths=tuple(payload["mlp"]["hidden_layer_widths"]),
            activation=payload["mlp"]["activation"],
            dropout_rate=payload["mlp"]["dropout_rate"],
            weight_init_scale=payload["mlp"]["weight_init_scale"],
            seed=payload["mlp"]["seed"],
        )
        mlp.validate()
        tr = payload["training"]
        cfg = DeepHitConfig(**tr)
        cfg.validate()
        weights = [np.asarray(layer["weights"], dtype=np.float64) for layer in payload["layers"]]
        biases = [np.asarray(layer["bias"], dtype=np.float64) for layer in payload["layers"]]
        widths = [weights[0].shape[0], *mlp.hidden_layer_widths, cfg.n_bins + 1]
        for i, (w, b) in enumerate(zip(weights, biases)):
            if w.shape != (widths[i], widths[i + 1]) or b.shape != (widths[i + 1],):
                raise DataError(f"checkpoint layer {i} has shape {w.shape}, expected {(widths[i], widths[i+1])}")
        names = payload["feature_names"]
        if names is not None and len(names) != weights[0].shape[0]:
            raise DataError(
                f"checkpoint feature list ({len(names)}) does not match input width {weights[0].shape[0]}"
            )
        scaler = None
        if payload["scaler"] is not None:
            scaler = ScalerStats(
                mean=np.asarray(payload["scaler"]["mean"], dtype=np.float64),
                sd=np.asarray(payload["scaler"]["sd"], dtype=np.float64),
            )
        return cls(
            mlp=mlp,
            cfg=cfg,
            weights=weights,
            biases=biases,
            feature_names=names,
            scaler=scaler,
            lookback=payload["lookback"],
        )


def _forward_cached(
    weights: list[np.ndarray],
    biases: list[np.ndarray],
    X: np.ndarray,
    mlp: MLPConfig,
    drop_masks: list[np.ndarray] | None,
) -> tuple[np.ndarray, dict]:
    """Logits plus the per-layer activations needed for backprop.

    `acts` are the layer inputs (post-dropout, what the weights consume);
    `raw` are the pre-dropout activation outputs the derivative needs.
    """
    keep = 1.0 - mlp.dropout_rate
    acts = [X]
    pre: list[np.ndarray] = []
    raw: list[np.ndarray] = []
    a = X
    n_hidden = len(weights) - 1
    for layer in range(n_hidden):
        z = a @ weights[layer] + biases[layer]
        h = _act(z, mlp.activation)
        pre.append(z)
        raw.append(h)
        if drop_masks is not None:
            h = h * drop_masks[layer] / keep
        acts.append(h)
        a = h
    logits = a @ weights[-1] + biases[-1]
    return logits, {"acts": acts, "pre": pre, "raw": raw}


def forward(model: DeepHitModel, x: np.ndarray) -> RiskCurve:
    """Risk curve for one standardized feature vector (inference: no dropout)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DataError("forward expects a single feature vector")
    pmf = model.forward_batch(x[np.newaxis, :])[0]
    return RiskCurve(pmf=pmf, cif=np.cumsum(pmf[:-1]))


def _pmf_grad_and_loss(
    pmf: np.ndarray, times: np.ndarray, events: np.ndarray, cfg: DeepHitConfig
) -> tuple[float, np.ndarray]:
    """Loss value and dL/dpmf for a batch of softmax rows."""
    n, k_out = pmf.shape
    k_bins = k_out - 1
    if ((times < 1) | (times > k_bins)).any():
        raise DataError(f"time_to_event outside 1..{k_bins}")
    g = np.zeros_like(pmf)
    idx = np.arange(n)
    t0 = times - 1

    # Likelihood: -log p_t for events, -log(1 - CIF_t) for censored rows.
    ev = events == 1
    p_event = pmf[idx, t0]
    rev = np.cumsum(pmf[:, ::-1], axis=1)[:, ::-1]  # tail sums including own bin
    tail_from = np.zeros(n)
    tail_from[~ev] = rev[idx[~ev], t0[~ev] + 1]  # mass strictly after bin t
    nll_terms = np.zeros(n)
    nll_terms[ev] = -np.log(np.maximum(p_event[ev], EPS))
    nll_terms[~ev] = -np.log(np.maximum(tail_from[~ev], EPS))
    loss = cfg.alpha_likelihood * float(nll_terms.mean()) if n else 0.0

    a_scale = cfg.alpha_likelihood / n
    ev_rows = np.flatnonzero(ev & (p_event >= EPS))
    g[ev_rows, t0[ev_rows]] -= a_scale / p_event[ev_rows]
    cens_rows = np.flatnonzero(~ev & (tail_from >= EPS))
    if cens_rows.size:
        after_t = np.arange(k_out)[np.newaxis, :] > t0[cens_rows][:, np.newaxis]
        g[cens_rows] -= (a_scale / tail_from[cens_rows])[:, np.newaxis] * after_t

    # Ranking: exp(-(CIF_i(t_i) - CIF_j(t_i)) / sigma) over pairs with
    # event_i = 1 and t_i < t_j, averaged.
    cif = np.cumsum(pmf[:, :-1], axis=1)
    valid = ev[:, np.newaxis] & (times[:, np.newaxis] < times[np.newaxis, :])
    n_pairs = int(valid.sum())
    if cfg.beta_ranking > 0 and n_pairs > 0:
        u = cif[idx, t0][:, np.newaxis]  # CIF_i(t_i)
        v = cif[:, t0].T  # v[i, j] = CIF_j(t_i)
        terms = np.where(valid, np.exp(-(u - v) / cfg.sigma_ranking), 0.0)
        loss += cfg.beta_ranking * float(terms.sum()) / n_pairs
        scale = cfg.beta_ranking / (cfg.sigma_ranking * n_pairs)
        onehot = np.zeros((n, k_bins))
        onehot[idx, t0] = 1.0
        g_cif = scale * (terms.T @ onehot)  # receiving side (+)
        g_cif -= scale * terms.sum(axis=1)[:, np.newaxis] * onehot  # emitting side (-)
        # dCIF_k / dpmf_m = 1[m <= k]  =>  accumulate tail sums over k.
        g[:, :-1] += np.cumsum(g_cif[:, ::-1], axis=1)[:, ::-1]

    return loss, g


def _logit_grad(pmf: np.ndarray, g_pmf: np.ndarray) -> np.ndarray:
    inner = (g_pmf * pmf).sum(axis=1, keepdims=True)
    return pmf * (g_pmf - inner)


def _loss_and_grads(
    weights: list[np.ndarray],
    biases: list[np.ndarray],
    X: np.ndarray,
    times: np.ndarray,
    events: np.ndarray,
    mlp: MLPConfig,
    cfg: DeepHitConfig,
    drop_masks: list[np.ndarray] | None = None,
    want_grads: bool = True,
) -> tuple[float, list[np.ndarray] | None, list[np.ndarray] | None]:
    logits, cache = _forward_cached(weights, biases, X, mlp, drop_masks)
    pmf = _softmax(logits)
    loss, g_pmf = _pmf_grad_and_loss(pmf, times, events, cfg)
    if not want_grads:
        return loss, None, None
    delta = _logit_grad(pmf, g_pmf)
    grads_w: list[np.ndarray] = [np.empty(0)] * len(weights)
    grads_b: list[np.ndarray] = [np.empty(0)] * len(weights)
    keep = 1.0 - mlp.dropout_rate
    acts, pre, raw = cache["acts"], cache["pre"], cache["raw"]
    for layer in range(len(weights) - 1, -1, -1):
        grads_w[layer] = acts[layer].T @ delta
        grads_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = delta @ weights[layer].T
            if drop_masks is not None:
                delta = delta * drop_masks[layer - 1] / keep
            delta = delta * _act_grad(pre[layer - 1], raw[layer - 1], mlp.activation)
    return loss, grads_w, grads_b


def loss(model: DeepHitModel, batch: Sequence[SurvivalSample], cfg: DeepHitConfig) -> float:
    """Batch loss alpha * NLL + beta * ranking (inference mode, no dropout)."""
    if not batch:
        raise DataError("loss of an empty batch is undefined")
    X, t, e = survival_arrays(list(batch))
    value, _, _ = _loss_and_grads(
        model.weights, model.biases, X, t, e, model.mlp, cfg, want_grads=False
    )
    return value


def gradients(
    model: DeepHitModel, batch: Sequence[SurvivalSample], cfg: DeepHitConfig
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Analytic parameter gradients of `loss` (checked against finite differences)."""
    if not batch:
        raise DataError("gradient of an empty batch is undefined")
    X, t, e = survival_arrays(list(batch))
    _, gw, gb = _loss_and_grads(model.weights, model.biases, X, t, e, model.mlp, cfg)
    return gw, gb


def nll(model: DeepHitModel, X: np.ndarray, times: np.ndarray, events: np.ndarray) -> float:
    """Likelihood-only loss, used for early stopping."""
    pmf = model.forward_batch(X)
    probe = DeepHitConfig(
        n_bins=model.cfg.n_bins, alpha_likelihood=1.0, beta_ranking=0.0, sigma_ranking=1.0
    )
    value, _ = _pmf_grad_and_loss(pmf, times, events, probe)
    return value


def train(
    samples: Sequence[SurvivalSample],
    mlp_cfg: MLPConfig | None = None,
    dh_cfg: DeepHitConfig | None = None,
) -> DeepHitModel:
    """Mini-batch gradient descent with decayed steps and early stopping.

    The last 10% of rows (chronologically) are held out for the stopping
    criterion (likelihood only); event rows in the fit portion are
    duplicated up to `event_upsample_ratio`. The returned model carries the
    best-validation parameters and an epoch-level `history`. Deterministic
    given the config seeds.
    """
    mlp_cfg = mlp_cfg or MLPConfig()
    dh_cfg = dh_cfg or DeepHitConfig()
    mlp_cfg.validate()
    dh_cfg.validate()
    samples = sorted(samples, key=lambda s: (s.anchor_date, s.player_id))
    if not samples:
        raise TrainingError("no training samples")
    X, t, e = survival_arrays(samples)
    if int(e.sum()) == 0:
        raise TrainingError("training set has zero events; ranking loss is undefined")
    n = len(samples)
    n_val = max(1, math.ceil(0.1 * n))
    n_fit = n - n_val
    if n_fit < 1:
        raise TrainingError(f"too few samples to train on ({n})")
    X_fit, t_fit, e_fit = X[:n_fit], t[:n_fit], e[:n_fit]
    X_val, t_val, e_val = X[n_fit:], t[n_fit:], e[n_fit:]

    rng = np.random.default_rng(mlp_cfg.seed)
    shuffle_rng = np.random.default_rng(dh_cfg.seed)
    if dh_cfg.event_upsample_ratio > 0:
        ev_rows = np.flatnonzero(e_fit == 1)
        cen_rows = np.flatnonzero(e_fit == 0)
        deficit = int(dh_cfg.event_upsample_ratio * cen_rows.size) - ev_rows.size
        if deficit > 0 and ev_rows.size:
            extra = shuffle_rng.choice(ev_rows, size=deficit, replace=True)
            keep = np.concatenate([np.arange(X_fit.shape[0]), extra])
            X_fit, t_fit, e_fit = X_fit[keep], t_fit[keep], e_fit[keep]
    n_fit = X_fit.shape[0]
    weights, biases = init_params(mlp_cfg, X.shape[1], dh_cfg.n_bins + 1, rng)
    model = DeepHitModel(mlp=mlp_cfg, cfg=dh_cfg, weights=weights, biases=biases)

    best_val = math.inf
    best = ([w.copy() for w in weights], [b.copy() for b in biases])
    stale = 0
    use_dropout = mlp_cfg.dropout_rate > 0.0
    for epoch in range(dh_cfg.epochs):
        lr = dh_cfg.learning_rate * dh_cfg.lr_decay**epoch
        order = shuffle_rng.permutation(n_fit)
        epoch_losses = []
        for start in range(0, n_fit, dh_cfg.batch_size):
            idx = order[start : start + dh_cfg.batch_size]
            masks = None
            if use_dropout:
                masks = [
                    (shuffle_rng.random((idx.size, w)) >= mlp_cfg.dropout_rate).astype(np.float64)
                    for w in mlp_cfg.hidden_layer_widths
                ]
            value, gw, gb = _loss_and_grads(
                weights, biases, X_fit[idx], t_fit[idx], e_fit[idx], mlp_cfg, dh_cfg, masks
            )
            epoch_losses.append(value)
            for layer in range(len(weights)):
                weights[layer] -= lr * gw[layer]
                biases[layer] -= lr * gb[layer]
        val_nll = nll(model, X_val, t_val, e_val)
        model.history.append(
            {"epoch": epoch, "train_loss": float(np.mean(epoch_losses)), "val_nll": val_nll, "lr": lr}
        )
        if val_nll < best_val - 1e-12:
            best_val = val_nll
            best = ([w.copy() for w in weights], [b.copy() for b in biases])
            stale = 0
        else:
            stale += 1
            if stale > dh_cfg.early_stop_patience:
                break
    model.weights, model.biases = best
    return model


def daily_risk_series(
    model: DeepHitModel, panel: FeaturePanel, player: str
) -> list[tuple[dt.date, RiskCurve]]:
    """One risk curve per eligible anchor day of the player, for plotting."""
    if model.feature_names is not None and panel.feature_names != model.feature_names:
        raise DataError("panel feature order does not match the model's training features")
    feats = _anchor_features(panel, model.lookback)
    p = panel.player_index(player)
    lo, hi = panel.obs_range_idx(player)
    series: list[tuple[dt.date, RiskCurve]] = []
    for d in range(lo + model.lookback - 1, hi + 1):
        x = feats[p, d]
        if model.scaler is not None:
            x = transform_x(model.scaler, x)
        else:
            x = np.where(np.isnan(x), 0.0, x)
        series.append((panel.start_date + dt.timedelta(days=d), forward(model, x)))
    return series

"""Run configuration: INI file + CLI overrides -> one validated object.

Every key lives in a section; the CLI exposes each as `--section-key`.
The run id is a hash of the canonical key=value listing, so identical
configurations map to the same run directory and artifacts are reused.
"""

from __future__ import annotations

import configparser
import hashlib
import os
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

ENV_OUTPUT_ROOT = "INJURYCAST_RUNS"

IMPUTATIONS = ("median", "bespoke", "linear", "none")
FAMILIES = ("deephit", "logreg", "random_forest", "gbt")
SPLITS = ("chronological", "lopo")

# section -> key -> (type, default). `output_root`'s default may be
# overridden by the INJURYCAST_RUNS environment variable.
SCHEMA: dict[str, dict[str, tuple[type, object]]] = {
    "data": {
        "monitoring_csv": (str, "auto"),
        "injuries_csv": (str, "auto"),
        "output_root": (str, "runs"),
    },
    "simulate": {
        "n_players": (int, 30),
        "n_days": (int, 300),
        "n_hazard_features": (int, 3),
        "n_noise_features": (int, 10),
        "hazard_weight": (float, 1.0),
        "base_rate": (float, 0.0014),
        "missing_rate_subjective": (float, 0.1),
        "missing_rate_objective": (float, 0.05),
        "seed": (int, 0),
    },
    "pipeline": {
        "imputation": (str, "bespoke"),
        "drop_threshold": (float, 0.5),
    },
    "cohort": {
        "lookback": (int, 21),
        "horizon": (int, 7),
        "post_injury_gap": (int, 7),
        "binary_lookback": (int, 7),
        "binary_horizon": (int, 7),
        "train_fraction": (float, 0.8),
    },
    "model": {
        "family": (str, "deephit"),
        "seed": (int, 7),
        "hidden": (str, "64,32"),
        "activation": (str, "tanh"),
        "dropout": (float, 0.1),
        "alpha_likelihood": (float, 1.0),
        "beta_ranking": (float, 1.0),
        "sigma_ranking": (float, 0.1),
        "learning_rate": (float, 0.02),
        "lr_decay": (float, 0.98),
        "batch_size": (int, 64),
        "epochs": (int, 200),
        "patience": (int, 10),
        "event_upsample": (float, 0.1),
        "grid": (bool, False),
    },
    "scorer": {
        "w_f1": (float, 0.4),
        "w_recall": (float, 0.3),
        "w_precision": (float, 0.15),
        "w_auc": (float, 0.15),
    },
    "explain": {
        "player": (str, "auto"),
        "date": (str, ""),
        "max_days": (int, 20),
        "background_size": (int, 100),
        "n_coalitions": (int, 2048),
        "seed": (int, 0),
    },
}


def _coerce(section: str, key: str, raw: object, errors: list[str]):
    typ, default = SCHEMA[section][key]
    if isinstance(raw, typ) and not (typ is int and isinstance(raw, bool)):
        return raw
    text = str(raw).strip()
    try:
        if typ is bool:
            lowered = text.lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        return typ(text)
    except ValueError:
        errors.append(f"{section}.{key}: cannot parse {text!r} as {typ.__name__}")
        return default


@dataclass
class RunConfig:
    values: dict[str, dict[str, object]] = field(default_factory=dict)

    def __post_init__(self):
        if not self.values:
            self.values = {s: {k: d for k, (_, d) in keys.items()} for s, keys in SCHEMA.items()}
            if os.environ.get(ENV_OUTPUT_ROOT):
                self.values["data"]["output_root"] = os.environ[ENV_OUTPUT_ROOT]

    def get(self, section: str, key: str):
        return self.values[section][key]

    def set(self, section: str, key: str, raw: object) -> None:
        errors: list[str] = []
        self.values[section][key] = _coerce(section, key, raw, errors)
        if errors:
            raise ConfigError(errors[0])

    # -- loading -----------------------------------------------------------

    @classmethod
    def load(cls, path: str | Path | None, overrides: dict[tuple[str, str], object] | None = None) -> "RunConfig":
        """Config file plus CLI overrides; every problem is reported at once."""
        cfg = cls()
        errors: list[str] = []
        if path is not None:
            path = Path(path)
            if not path.exists():
                raise ConfigError(f"config file not found: {path}")
            parser = configparser.ConfigParser()
            try:
                parser.read(path, encoding="utf-8")
            except configparser.Error as exc:
                raise ConfigError(f"cannot parse config {path}: {exc}") from exc
            for section in parser.sections():
                if section not in SCHEMA:
                    errors.append(f"unknown config section [{section}]")
                    continue
                for key, raw in parser.items(section):
                    if key not in SCHEMA[section]:
                        errors.append(f"unknown config key {section}.{key}")
                        continue
                    cfg.values[section][key] = _coerce(section, key, raw, errors)
        for (section, key), raw in (overrides or {}).items():
            cfg.values[section][key] = _coerce(section, key, raw, errors)
        errors.extend(cfg._semantic_errors())
        if errors:
            raise ConfigError("invalid configuration:\n" + "\n".join(f"  - {e}" for e in errors))
        return cfg

    def _semantic_errors(self) -> list[str]:
        errors: list[str] = []
        v = self.values
        if v["pipeline"]["imputation"] not in IMPUTATIONS:
            errors.append(f"pipeline.imputation must be one of {IMPUTATIONS}")
        if v["model"]["family"] not in FAMILIES:
            errors.append(f"model.family must be one of {FAMILIES}")
        if not 0.0 < v["cohort"]["train_fraction"] < 1.0:
            errors.append("cohort.train_fraction must be in (0, 1)")
        if v["simulate"]["n_players"] < 2:
            errors.append("simulate.n_players must be >= 2")
        if not 0.0 < v["simulate"]["base_rate"] < 1.0:
            errors.append("simulate.base_rate must be in (0, 1)")
        for key in ("lookback", "horizon", "post_injury_gap", "binary_lookback", "binary_horizon"):
            minimum = 0 if key == "post_injury_gap" else 1
            if v["cohort"][key] < minimum:
                errors.append(f"cohort.{key} must be >= {minimum}")
        weights = [v["scorer"][k] for k in ("w_f1", "w_recall", "w_precision", "w_auc")]
        if any(w < 0 for w in weights):
            errors.append("scorer weights must be >= 0")
        elif abs(sum(weights) - 1.0) > 1e-9:
            errors.append(f"scorer weights must sum to 1 (got {sum(weights)})")
        try:
            self.hidden_widths()
        except ConfigError as exc:
            errors.append(str(exc))
        if v["explain"]["date"]:
            import datetime as dt

            try:
                dt.date.fromisoformat(str(v["explain"]["date"]))
            except ValueError:
                errors.append(f"explain.date is not an ISO date: {v['explain']['date']!r}")
        return errors

    # -- derived views -----------------------------------------------------

    def hidden_widths(self) -> tuple[int, ...]:
        raw = str(self.get("model", "hidden"))
        try:
            widths = tuple(int(p) for p in raw.split(",") if p.strip())
        except ValueError:
            raise ConfigError(f"model.hidden must be comma-separated ints, got {raw!r}") from None
        if not widths or any(w < 1 for w in widths):
            raise ConfigError(f"model.hidden widths must be >= 1, got {raw!r}")
        return widths

    def canonical_text(self) -> str:
        lines: list[str] = []
        for section in sorted(self.values):
            lines.append(f"[{section}]")
            for key in sorted(self.values[section]):
                lines.append(f"{key} = {self.values[section][key]}")
            lines.append("")
        return "\n".join(lines)

    def run_id(self) -> str:
        return hashlib.sha256(self.canonical_text().encode("utf-8")).hexdigest()[:12]

    def run_dir(self) -> Path:
        return Path(str(self.get("data", "output_root"))) / self.run_id()

"""Atomic artifact writing and light schema checks for the run directory.

All JSON artifacts are UTF-8, carry a top-level `schema_version`, and are
serialised deterministically (sorted keys) so identical runs produce
byte-identical files. Writes go through a temp file + rename.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path

from .errors import DataError

SCHEMA_VERSION = 1


def atomic_write_text(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_json(path: str | Path, payload: dict) -> None:
    atomic_write_text(path, json.dumps(payload, sort_keys=True, indent=2) + "\n")


def read_json(path: str | Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise DataError(f"artifact not found: {path}")
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"artifact {path} is not valid JSON: {exc}") from exc


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise DataError(f"artifact schema violation: {message}")


def validate_versioned(payload: dict, name: str) -> None:
    _require(isinstance(payload, dict), f"{name} must be a JSON object")
    _require(payload.get("schema_version") == SCHEMA_VERSION, f"{name} missing schema_version")


def validate_risk_curves(payload: dict) -> None:
    validate_versioned(payload, "risk_curves.json")
    _require(isinstance(payload.get("entries"), list), "entries must be a list")
    for entry in payload["entries"]:
        _require(
            set(entry) >= {"player_id", "date", "pmf", "cif", "risk_score"},
            f"risk entry keys incomplete: {sorted(entry)}",
        )
        _require(len(entry["pmf"]) == len(entry["cif"]) + 1, "pmf must have one more bin than cif")
        _require(abs(sum(entry["pmf"]) - 1.0) < 1e-6, "pmf must sum to 1")


def validate_shap(payload: dict) -> None:
    validate_versioned(payload, "shap.json")
    _require(isinstance(payload.get("entries"), list), "entries must be a list")
    for entry in payload["entries"]:
        _require(
            set(entry) >= {"player_id", "date", "base_value", "prediction", "phi", "feature_names"},
            f"attribution keys incomplete: {sorted(entry)}",
        )
        _require(len(entry["phi"]) == len(entry["feature_names"]), "phi/feature_names length mismatch")


def validate_metrics(payload: dict) -> None:
    validate_versioned(payload, "metrics.json")
    _require("model" in payload, "metrics must record the model family")

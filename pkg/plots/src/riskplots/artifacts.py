"""Readers for the run-directory files the figures are built from."""

from __future__ import annotations

import csv
import datetime as dt
import json
from pathlib import Path


class ArtifactError(Exception):
    """A required artifact is missing or does not match its schema."""


class UnknownPlayerError(ArtifactError):
    """The requested player does not appear in the artifact."""


def _read_json(path: Path) -> dict:
    if not path.exists():
        raise ArtifactError(f"artifact not found: {path}")
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ArtifactError(f"{path} is not valid JSON: {exc}") from exc
    if payload.get("schema_version") != 1:
        raise ArtifactError(f"{path}: unsupported schema_version {payload.get('schema_version')}")
    return payload


def load_risk_curves(run_dir: str | Path) -> dict[str, list[tuple[dt.date, float]]]:
    """Per player: (date, risk_score) series sorted by date."""
    payload = _read_json(Path(run_dir) / "risk_curves.json")
    series: dict[str, list[tuple[dt.date, float]]] = {}
    for entry in payload.get("entries", []):
        try:
            player = entry["player_id"]
            point = (dt.date.fromisoformat(entry["date"]), float(entry["risk_score"]))
        except (KeyError, ValueError) as exc:
            raise ArtifactError(f"malformed risk entry {entry}: {exc}") from exc
        series.setdefault(player, []).append(point)
    for points in series.values():
        points.sort(key=lambda p: p[0])
    return series


def load_shap(run_dir: str | Path) -> list[dict]:
    """Attribution entries with parsed dates and float phi vectors."""
    payload = _read_json(Path(run_dir) / "shap.json")
    entries = []
    for entry in payload.get("entries", []):
        try:
            entries.append(
                {
                    "player_id": entry["player_id"],
                    "date": dt.date.fromisoformat(entry["date"]),
                    "base_value": float(entry["base_value"]),
                    "prediction": float(entry["prediction"]),
                    "phi": [float(v) for v in entry["phi"]],
                    "feature_names": list(entry["feature_names"]),
                }
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ArtifactError(f"malformed attribution entry: {exc}") from exc
    return entries


def load_injuries(path: str | Path) -> list[tuple[str, dt.date]]:
    """(player_id, date) pairs from an injuries CSV."""
    path = Path(path)
    if not path.exists():
        raise ArtifactError(f"injury file not found: {path}")
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if not reader.fieldnames or "player_id" not in reader.fieldnames or "date" not in reader.fieldnames:
            raise ArtifactError(f"{path} must have player_id and date columns")
        for i, row in enumerate(reader):
            try:
                out.append((row["player_id"], dt.date.fromisoformat(row["date"])))
            except (TypeError, ValueError) as exc:
                raise ArtifactError(f"{path} row {i}: bad date: {exc}") from exc
    return out

"""Parsing and physiological-plausibility cleaning of raw monitoring data.

Monitoring CSVs are UTF-8, comma-delimited, one header row, ISO-8601 dates.
A row is one session/questionnaire record; several rows may share a
(player, date) pair and are aggregated later into daily values. Cleaning
drops whole rows that fail hard plausibility rules and reports every
rejection so the audit trail can be exported (`rejections.csv`).
"""

from __future__ import annotations

import csv
import datetime as dt
import logging
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import DataError

log = logging.getLogger(__name__)

ZONE_PROPORTION_FIELDS = ("sp_lir_p", "sp_mir_p", "sp_hir_p", "sp_spr_p")

WELLNESS_FIELDS = ("fatigue", "mood", "readiness", "sleep_duration", "soreness", "stress")

# Every numeric column a monitoring CSV may carry, in canonical order.
RAW_NUMERIC_FIELDS = (
    "fatigue",
    "mood",
    "readiness",
    "sleep_duration",
    "soreness",
    "stress",
    "rpe",
    "srpe",
    "duration_subj",
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

INJURY_TYPES = ("acute", "overuse")

# Cleaning rules: rule id -> (field, strict upper bound). Boundary values
# are retained; only strictly larger readings are implausible.
CLEANING_RULES = {
    "speed_km_h_max>32": ("speed_km_h_max", 32.0),
    "duration_obj>200": ("duration_obj", 200.0),
    "distance>16": ("distance", 16.0),
}


@dataclass(frozen=True)
class PlayerDay:
    """One player's monitoring record for one calendar day (or session).

    Every measurement is individually optional; None means not recorded.
    """

    player_id: str
    date: dt.date
    fatigue: float | None = None
    mood: float | None = None
    readiness: float | None = None
    sleep_duration: float | None = None
    soreness: float | None = None
    stress: float | None = None
    rpe: float | None = None
    srpe: float | None = None
    duration_subj: float | None = None
    duration_obj: float | None = None
    speed_km_h_mean: float | None = None
    speed_km_h_max: float | None = None
    speed_km_h_std: float | None = None
    sp_lir_p: float | None = None
    sp_lir_t: float | None = None
    sp_lir_d: float | None = None
    sp_mir_p: float | None = None
    sp_mir_t: float | None = None
    sp_mir_d: float | None = None
    sp_hir_p: float | None = None
    sp_hir_t: float | None = None
    sp_hir_d: float | None = None
    sp_spr_p: float | None = None
    sp_spr_t: float | None = None
    sp_spr_d: float | None = None
    distance: float | None = None
    distance_per_min: float | None = None

    def violations(self) -> list[str]:
        """Internal-consistency violations (empty list when the record is sound)."""
        problems: list[str] = []
        prop_sum = 0.0
        any_prop = False
        for name in ZONE_PROPORTION_FIELDS:
            v = getattr(self, name)
            if v is None:
                continue
            any_prop = True
            if not 0.0 <= v <= 1.0:
                problems.append(f"{name}={v} outside [0, 1]")
            else:
                prop_sum += v
        if any_prop and prop_sum > 1.0 + 1e-6:
            problems.append(f"speed-zone proportions sum to {prop_sum}")
        if self.duration_obj is not None and self.duration_obj < 0:
            problems.append(f"duration_obj={self.duration_obj} negative")
        if self.distance is not None and self.distance < 0:
            problems.append(f"distance={self.distance} negative")
        if (
            self.distance is not None
            and self.duration_obj is not None
            and self.duration_obj > 0
            and self.distance_per_min is not None
        ):
            expected = self.distance / self.duration_obj
            if abs(self.distance_per_min - expected) > 1e-6:
                problems.append(
                    f"distance_per_min={self.distance_per_min} != distance/duration_obj={expected}"
                )
        return problems


@dataclass(frozen=True)
class InjuryEvent:
    """A dated injury with its type and injured body part."""

    player_id: str
    date: dt.date
    injury_type: str
    body_part: str

    def __post_init__(self):
        if self.injury_type not in INJURY_TYPES:
            raise DataError(
                f"injury_type {self.injury_type!r} not one of {INJURY_TYPES}"
            )


@dataclass(frozen=True)
class Rejection:
    row_index: int
    rule: str
    value: float


@dataclass
class CleaningReport:
    """Audit trail of `clean`: which rows were dropped and why.

    `rule_counts` counts rows per rule; a row violating several rules is
    counted under each, so the per-rule counts can exceed `rejected_rows`.
    `rejected_rows + retained_rows == input_rows` always holds.
    """

    input_rows: int
    retained_rows: int
    rejected_rows: int
    rule_counts: dict[str, int]
    rejections: list[Rejection]

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["row_index", "rule", "value"])
            for r in self.rejections:
                writer.writerow([r.row_index, r.rule, repr(r.value)])


def _parse_float(raw: str, column: str, row_index: int) -> float | None:
    text = raw.strip()
    if text == "":
        return None
    try:
        return float(text)
    except ValueError:
        raise DataError(
            f"row {row_index}: cannot parse {column}={raw!r} as a number",
            row_index=row_index,
        ) from None


def _parse_date(raw: str, row_index: int) -> dt.date:
    try:
        return dt.date.fromisoformat(raw.strip())
    except ValueError:
        raise DataError(
            f"row {row_index}: invalid ISO-8601 date {raw!r}", row_index=row_index
        ) from None


def parse_monitoring_csv(path: str | Path) -> list[PlayerDay]:
    """Read a monitoring CSV into PlayerDay records.

    The header must contain `player_id` and `date`; any subset of the
    canonical numeric columns may follow. Unknown columns are skipped with
    one warning. Empty cells become None.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"monitoring file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in ("player_id", "date") if c not in header]
        if missing:
            raise DataError(f"monitoring CSV missing mandatory columns: {missing}")
        known = set(RAW_NUMERIC_FIELDS) | {"player_id", "date"}
        unknown = [c for c in header if c not in known]
        if unknown:
            log.warning("ignoring %d unknown monitoring columns: %s", len(unknown), unknown)
        records: list[PlayerDay] = []
        for i, row in enumerate(reader):
            player = (row.get("player_id") or "").strip()
            if not player:
                raise DataError(f"row {i}: empty player_id", row_index=i)
            values = {
                name: _parse_float(row[name], name, i)
                for name in RAW_NUMERIC_FIELDS
                if name in row and row[name] is not None
            }
            records.append(PlayerDay(player_id=player, date=_parse_date(row["date"] or "", i), **values))
    return records


def clean(records: list[PlayerDay]) -> tuple[list[PlayerDay], CleaningReport]:
    """Drop physiologically implausible rows; never fails, only rejects.

    Rules (strict thresholds, boundary values retained):
    max speed > 32 km/h, objective duration > 200 min, distance > 16 km.
    """
    kept: list[PlayerDay] = []
    rejections: list[Rejection] = []
    rule_counts = {rule: 0 for rule in CLEANING_RULES}
    rejected = 0
    for i, rec in enumerate(records):
        bad = False
        for rule, (field_name, bound) in CLEANING_RULES.items():
            value = getattr(rec, field_name)
            if value is not None and value > bound:
                rejections.append(Rejection(row_index=i, rule=rule, value=value))
                rule_counts[rule] += 1
                bad = True
        if bad:
            rejected += 1
        else:
            kept.append(rec)
    report = CleaningReport(
        input_rows=len(records),
        retained_rows=len(kept),
        rejected_rows=rejected,
        rule_counts=rule_counts,
        rejections=rejections,
    )
    return kept, report


def parse_injury_reports(path: str | Path) -> list[InjuryEvent]:
    """Read an injury CSV (player_id, date, injury_type, body_part).

    Events are returned sorted by (player_id, date); same-day duplicates
    are retained in file order.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"injury file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        required = ["player_id", "date", "injury_type", "body_part"]
        missing = [c for c in required if c not in header]
        if missing:
            raise DataError(f"injury CSV missing mandatory columns: {missing}")
        events: list[InjuryEvent] = []
        for i, row in enumerate(reader):
            injury_type = (row["injury_type"] or "").strip()
            if injury_type not in INJURY_TYPES:
                raise DataError(
                    f"row {i}: unknown injury_type {injury_type!r}", row_index=i
                )
            events.append(
                InjuryEvent(
                    player_id=(row["player_id"] or "").strip(),
                    date=_parse_date(row["date"] or "", i),
                    injury_type=injury_type,
                    body_part=(row["body_part"] or "").strip(),
                )
            )
    events.sort(key=lambda e: (e.player_id, e.date))
    return events


def write_monitoring_csv(records: list[PlayerDay], path: str | Path) -> None:
    """Write records using the same schema `parse_monitoring_csv` reads."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["player_id", "date", *RAW_NUMERIC_FIELDS])
        for rec in records:
            row: list[str] = [rec.player_id, rec.date.isoformat()]
            for name in RAW_NUMERIC_FIELDS:
                v = getattr(rec, name)
                row.append("" if v is None else repr(v))
            writer.writerow(row)


def write_injury_csv(events: list[InjuryEvent], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["player_id", "date", "injury_type", "body_part"])
        for e in events:
            writer.writerow([e.player_id, e.date.isoformat(), e.injury_type, e.body_part])


PLAYER_DAY_FIELDS = tuple(f.name for f in fields(PlayerDay))

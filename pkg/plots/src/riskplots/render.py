"""Headless matplotlib figures: risk timelines and attribution bars."""

from __future__ import annotations

import datetime as dt
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.dates as mdates
import matplotlib.pyplot as plt
import numpy as np

from .artifacts import ArtifactError, UnknownPlayerError

RISK_COLOR = "#1f5fa8"
MARKER_COLOR = "#c23b22"
POSITIVE_COLOR = "#c23b22"
NEGATIVE_COLOR = "#2a7e43"

# stable ids make SVG output byte-deterministic for identical inputs
matplotlib.rcParams["svg.hashsalt"] = "riskplots"


def plot_risk_timeline(
    series: dict[str, list[tuple[dt.date, float]]],
    injuries: list[tuple[str, dt.date]],
    player: str,
):
    """Risk score over time for one player, injuries as dashed markers."""
    if player not in series:
        available = ", ".join(sorted(series)) or "(none)"
        raise UnknownPlayerError(f"player {player!r} not in risk curves; available: {available}")
    points = series[player]
    if not points:
        raise ArtifactError(f"player {player!r} has an empty risk series")
    dates = [p[0] for p in points]
    scores = [p[1] for p in points]
    fig, ax = plt.subplots(figsize=(9, 3.2))
    ax.plot(dates, scores, color=RISK_COLOR, linewidth=1.4, label="predicted risk")
    for who, when in injuries:
        if who == player:
            ax.axvline(when, color=MARKER_COLOR, linestyle="--", linewidth=1.1, label="injury")
    ax.set_ylabel("risk within horizon")
    ax.set_xlabel("date")
    ax.set_title(f"Predicted injury risk over time: {player}")
    ax.set_ylim(bottom=0.0)
    ax.xaxis.set_major_formatter(mdates.DateFormatter("%Y-%m-%d"))
    fig.autofmt_xdate()
    # collapse duplicate legend labels
    handles, labels = ax.get_legend_handles_labels()
    seen: dict[str, object] = {}
    for h, l in zip(handles, labels):
        seen.setdefault(l, h)
    ax.legend(seen.values(), seen.keys(), loc="upper left", frameon=False)
    fig.tight_layout()
    return fig


def plot_attribution(entry: dict, top: int = 10):
    """Horizontal bars of the largest |phi| contributions, signed colors."""
    phi = np.asarray(entry["phi"], dtype=float)
    names = entry["feature_names"]
    if len(names) != phi.size:
        raise ArtifactError("attribution entry has mismatched phi/feature_names")
    order = np.argsort(-np.abs(phi), kind="mergesort")[: min(top, phi.size)]
    chosen = order[::-1]  # largest at the top of the axis
    values = phi[chosen]
    labels = [names[i] for i in chosen]
    colors = [POSITIVE_COLOR if v > 0 else NEGATIVE_COLOR for v in values]
    fig, ax = plt.subplots(figsize=(7, 0.45 * len(chosen) + 1.6))
    ax.barh(np.arange(len(chosen)), values, color=colors)
    ax.set_yticks(np.arange(len(chosen)))
    ax.set_yticklabels(labels)
    ax.axvline(0.0, color="black", linewidth=0.8)
    ax.set_xlabel("contribution to risk score")
    ax.set_title(f"Risk drivers: {entry['player_id']} on {entry['date'].isoformat()}")
    ax.annotate(
        f"base value {entry['base_value']:.3f} -> prediction {entry['prediction']:.3f}",
        xy=(0.0, 1.02),
        xycoords="axes fraction",
        fontsize=9,
    )
    if not np.any(phi):
        ax.annotate(
            "all feature contributions are zero",
            xy=(0.5, 0.5),
            xycoords="axes fraction",
            ha="center",
            fontsize=10,
            color="gray",
        )
    fig.tight_layout()
    return fig


def save_figure(fig, out: str | Path) -> None:
    """Write PNG or SVG (by suffix) without embedded timestamps."""
    out = Path(out)
    fmt = out.suffix.lstrip(".").lower()
    if fmt not in ("png", "svg"):
        raise ArtifactError(f"unsupported output format {fmt!r}; use .png or .svg")
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, format=fmt, dpi=150, metadata={"Date": None} if fmt == "svg" else None)
    plt.close(fig)

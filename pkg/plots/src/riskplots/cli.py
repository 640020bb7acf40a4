"""`plots` command: render figures from a completed run directory.

    plots risk --run <dir> --player <id> --out <file.png|svg>
    plots attribution --run <dir> --player <id> [--date YYYY-MM-DD] --out <file>

Exit codes: 0 ok, 2 bad arguments (e.g. unknown player, listed), 3 missing
or malformed artifacts.
"""

from __future__ import annotations

import argparse
import datetime as dt
import sys
from pathlib import Path

from .artifacts import (
    ArtifactError,
    UnknownPlayerError,
    load_injuries,
    load_risk_curves,
    load_shap,
)
from .render import plot_attribution, plot_risk_timeline, save_figure


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="plots", description=__doc__)
    sub = parser.add_subparsers(dest="kind", required=True)

    risk = sub.add_parser("risk", help="risk-over-time line with injury markers")
    risk.add_argument("--run", required=True, help="run directory with risk_curves.json")
    risk.add_argument("--player", required=True)
    risk.add_argument("--out", required=True, help="output image (.png or .svg)")
    risk.add_argument(
        "--injuries", default=None, help="injuries CSV (default <run>/injuries.csv)"
    )

    att = sub.add_parser("attribution", help="per-day feature contribution bars")
    att.add_argument("--run", required=True, help="run directory with shap.json")
    att.add_argument("--player", required=True)
    att.add_argument("--date", default=None, help="ISO date; default: first entry for the player")
    att.add_argument("--top", type=int, default=10, help="bars to draw (default 10)")
    att.add_argument("--out", required=True)
    return parser


def _render_risk(args) -> None:
    run = Path(args.run)
    series = load_risk_curves(run)
    injuries_path = Path(args.injuries) if args.injuries else run / "injuries.csv"
    injuries = load_injuries(injuries_path)
    fig = plot_risk_timeline(series, injuries, args.player)
    save_figure(fig, args.out)


def _render_attribution(args) -> None:
    all_entries = load_shap(Path(args.run))
    entries = [e for e in all_entries if e["player_id"] == args.player]
    if not entries:
        available = ", ".join(sorted({e["player_id"] for e in all_entries})) or "(none)"
        raise UnknownPlayerError(
            f"no attributions for player {args.player!r}; available: {available}"
        )
    if args.date is not None:
        try:
            wanted = dt.date.fromisoformat(args.date)
        except ValueError:
            raise ArtifactError(f"--date {args.date!r} is not an ISO date") from None
        entries = [e for e in entries if e["date"] == wanted]
        if not entries:
            raise ArtifactError(f"no attribution for {args.player} on {args.date}")
    fig = plot_attribution(entries[0], top=args.top)
    save_figure(fig, args.out)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.kind == "risk":
            _render_risk(args)
        else:
            _render_attribution(args)
    except UnknownPlayerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ArtifactError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

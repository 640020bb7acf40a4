"""Figure rendering against a real run directory and hand-built artifacts."""

import datetime as dt
import json
import subprocess
import sys
from pathlib import Path

import pytest

from riskplots import (
    ArtifactError,
    load_injuries,
    load_risk_curves,
    load_shap,
    plot_attribution,
    plot_risk_timeline,
    save_figure,
)
from riskplots.cli import main


@pytest.fixture(scope="session")
def run_dir(tmp_path_factory):
    """A completed synthetic run produced through the pipeline CLI."""
    root = tmp_path_factory.mktemp("runs")
    args = [
        "--simulate-n-players", "6",
        "--simulate-n-days", "110",
        "--simulate-seed", "5",
        "--simulate-base-rate", "0.005",
        "--model-epochs", "12",
        "--explain-max-days", "3",
        "--explain-n-coalitions", "128",
        "--explain-background-size", "30",
    ]
    for stage in ("simulate", "ingest", "features", "impute", "train", "evaluate", "explain"):
        subprocess.run(
            [sys.executable, "-m", "injurycast.cli", stage, *args],
            check=True,
            env={"INJURYCAST_RUNS": str(root), "PATH": "/usr/bin:/bin"},
        )
    return next(root.iterdir())


def axvline_count(fig):
    ax = fig.axes[0]
    return sum(
        1
        for line in ax.lines
        if line.get_linestyle() == "--" and len(set(line.get_xdata())) == 1
    )


class TestAgainstRealRun:
    def test_one_marker_per_injury(self, run_dir):
        series = load_risk_curves(run_dir)
        injuries = load_injuries(run_dir / "injuries.csv")
        player = max(series, key=lambda p: sum(1 for who, _ in injuries if who == p))
        fig = plot_risk_timeline(series, injuries, player)
        expected = sum(1 for who, _ in injuries if who == player)
        assert expected >= 1
        ok = axvline_count(fig) == expected
        print(f"ACCEPTANCE {'PASS' if ok else 'FAIL'} [plot-smoke] {expected} injuries -> {axvline_count(fig)} markers")
        assert ok

    def test_attribution_renders_top_ten_bars(self, run_dir):
        entries = load_shap(run_dir)
        assert entries
        entry = entries[0]
        fig = plot_attribution(entry, top=10)
        bars = fig.axes[0].patches
        ok = len(bars) == min(10, len(entry["feature_names"]))
        print(f"ACCEPTANCE {'PASS' if ok else 'FAIL'} [plot-smoke] attribution bars: {len(bars)}")
        assert ok

    def test_cli_renders_both_formats_headless(self, run_dir, tmp_path):
        series = load_risk_curves(run_dir)
        player = sorted(series)[0]
        for suffix in ("png", "svg"):
            out = tmp_path / f"risk.{suffix}"
            assert main(["risk", "--run", str(run_dir), "--player", player, "--out", str(out)]) == 0
            assert out.stat().st_size > 0
        entry = load_shap(run_dir)[0]
        out = tmp_path / "att.png"
        code = main([
            "attribution", "--run", str(run_dir),
            "--player", entry["player_id"],
            "--date", entry["date"].isoformat(),
            "--out", str(out),
        ])
        assert code == 0 and out.stat().st_size > 0

    def test_unknown_player_lists_available(self, run_dir, tmp_path, capsys):
        code = main(["risk", "--run", str(run_dir), "--player", "nobody", "--out", str(tmp_path / "x.png")])
        assert code == 2
        err = capsys.readouterr().err
        assert "available" in err and "p00" in err

    def test_deterministic_output(self, run_dir, tmp_path):
        series = load_risk_curves(run_dir)
        player = sorted(series)[0]
        outs = []
        for i in range(2):
            out = tmp_path / f"r{i}.svg"
            assert main(["risk", "--run", str(run_dir), "--player", player, "--out", str(out)]) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]


def write_artifacts(tmp_path, entries_risk, entries_shap, injuries):
    (tmp_path / "risk_curves.json").write_text(
        json.dumps({"schema_version": 1, "entries": entries_risk})
    )
    (tmp_path / "shap.json").write_text(
        json.dumps({"schema_version": 1, "player_id": "p1", "season_importance": [], "entries": entries_shap})
    )
    lines = ["player_id,date,injury_type,body_part"] + [
        f"{p},{d},acute,thigh" for p, d in injuries
    ]
    (tmp_path / "injuries.csv").write_text("\n".join(lines) + "\n")


class TestEdgeCases:
    def test_empty_series_is_error(self, tmp_path):
        write_artifacts(tmp_path, [], [], [])
        with pytest.raises(ArtifactError):
            plot_risk_timeline(load_risk_curves(tmp_path), [], "p1")

    def test_all_zero_phi_draws_note(self, tmp_path):
        entry = {
            "player_id": "p1",
            "date": dt.date(2020, 5, 1),
            "base_value": 0.2,
            "prediction": 0.2,
            "phi": [0.0, 0.0, 0.0],
            "feature_names": ["a", "b", "c"],
        }
        fig = plot_attribution(entry)
        notes = [t.get_text() for t in fig.axes[0].texts]
        assert any("zero" in n for n in notes)
        assert len(fig.axes[0].patches) == 3

    def test_top_k_exceeding_features_returns_all(self):
        entry = {
            "player_id": "p1",
            "date": dt.date(2020, 5, 1),
            "base_value": 0.1,
            "prediction": 0.4,
            "phi": [0.3, -0.1],
            "feature_names": ["a", "b"],
        }
        fig = plot_attribution(entry, top=10)
        assert len(fig.axes[0].patches) == 2

    def test_missing_artifact_exit_code(self, tmp_path, capsys):
        code = main(["risk", "--run", str(tmp_path), "--player", "p1", "--out", str(tmp_path / "x.png")])
        assert code == 3

    def test_bad_format_rejected(self, tmp_path):
        write_artifacts(
            tmp_path,
            [{"player_id": "p1", "date": "2020-05-01", "pmf": [1.0], "cif": [], "risk_score": 0.3}],
            [],
            [],
        )
        fig = plot_risk_timeline(load_risk_curves(tmp_path), [], "p1")
        with pytest.raises(ArtifactError):
            save_figure(fig, tmp_path / "out.pdf")

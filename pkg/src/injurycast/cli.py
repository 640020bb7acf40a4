"""Pipeline orchestration: one subcommand per stage, one directory per run.

Stages communicate only through files in `runs/<run_id>/`, where the run id
hashes the effective configuration (identical configs share a directory and
its cached artifacts). Every stage starts by echoing the configuration it
ran with. Failures exit nonzero with a machine-readable error record on
stderr: 2 config, 3 data, 4 training.
"""

from __future__ import annotations

import argparse
import datetime as dt
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import baselines
from .artifacts import (
    SCHEMA_VERSION,
    atomic_write_json,
    atomic_write_text,
    read_json,
    sha256_file,
)
from .cohort import (
    BinarySample,
    apply_scaler,
    build_binary_samples,
    build_survival_samples,
    chronological_split,
    fit_scaler,
    lopo_folds,
    oversample_minority,
    survival_arrays,
    write_binary_csv,
    write_survival_csv,
)
from .deephit import DeepHitConfig, DeepHitModel, MLPConfig, daily_risk_series, risk_score
from .deephit import train as train_deephit
from .errors import ConfigError, DataError, PipelineError
from .explain import day_explanation
from .features import build_raw_panel, derive_features
from .impute import IMPUTERS, diagnostics, drop_high_missingness
from .ingest import (
    clean,
    parse_injury_reports,
    parse_monitoring_csv,
    write_injury_csv,
    write_monitoring_csv,
)
from .metrics import (
    binary_metrics,
    c_index,
    injury_counts_by_player,
    lopo_evaluate,
    sessions_tracked,
)
from .panel import FeaturePanel
from .runconfig import SCHEMA, RunConfig
from .synth import default_spec, generate, panel_to_records

log = logging.getLogger(__name__)

STAGES = (
    "simulate",
    "ingest",
    "features",
    "impute",
    "build",
    "train",
    "evaluate",
    "lopo",
    "explain",
    "report",
)


# -- plumbing ----------------------------------------------------------------


def _atomic_csv(path: Path, writer) -> None:
    tmp = path.with_name(path.name + f".tmp{os.getpid()}")
    try:
        writer(tmp)
        os.replace(tmp, path)
    except BaseException:
        if tmp.exists():
            tmp.unlink()
        raise


def _data_paths(cfg: RunConfig, run_dir: Path) -> tuple[Path, Path]:
    mon = str(cfg.get("data", "monitoring_csv"))
    inj = str(cfg.get("data", "injuries_csv"))
    mon_path = run_dir / "monitoring.csv" if mon == "auto" else Path(mon)
    inj_path = run_dir / "injuries.csv" if inj == "auto" else Path(inj)
    missing = [str(p) for p in (mon_path, inj_path) if not p.exists()]
    if missing:
        raise ConfigError(
            "input files not found (run `simulate` first or point data.* at files): "
            + ", ".join(missing)
        )
    return mon_path, inj_path


def _need(run_dir: Path, name: str, producer: str) -> Path:
    path = run_dir / name
    if not path.exists():
        raise DataError(f"{name} missing from {run_dir}; run `{producer}` first")
    return path


def _load_panel(run_dir: Path, name: str, producer: str) -> FeaturePanel:
    return FeaturePanel.from_csv(_need(run_dir, name, producer))


def _mlp_config(cfg: RunConfig) -> MLPConfig:
    return MLPConfig(
        hidden_layer_widths=cfg.hidden_widths(),
        activation=str(cfg.get("model", "activation")),
        dropout_rate=float(cfg.get("model", "dropout")),
        seed=int(cfg.get("model", "seed")),
    )


def _dh_config(cfg: RunConfig) -> DeepHitConfig:
    return DeepHitConfig(
        n_bins=int(cfg.get("cohort", "horizon")),
        alpha_likelihood=float(cfg.get("model", "alpha_likelihood")),
        beta_ranking=float(cfg.get("model", "beta_ranking")),
        sigma_ranking=float(cfg.get("model", "sigma_ranking")),
        learning_rate=float(cfg.get("model", "learning_rate")),
        lr_decay=float(cfg.get("model", "lr_decay")),
        batch_size=int(cfg.get("model", "batch_size")),
        epochs=int(cfg.get("model", "epochs")),
        early_stop_patience=int(cfg.get("model", "patience")),
        event_upsample_ratio=float(cfg.get("model", "event_upsample")),
        seed=int(cfg.get("model", "seed")),
    )


def _scorer(cfg: RunConfig) -> baselines.ScorerWeights:
    return baselines.ScorerWeights(
        w_f1=float(cfg.get("scorer", "w_f1")),
        w_recall=float(cfg.get("scorer", "w_recall")),
        w_precision=float(cfg.get("scorer", "w_precision")),
        w_auc=float(cfg.get("scorer", "w_auc")),
    )


def _survival_samples(cfg: RunConfig, panel: FeaturePanel, injuries):
    return build_survival_samples(
        panel,
        injuries,
        lookback=int(cfg.get("cohort", "lookback")),
        horizon=int(cfg.get("cohort", "horizon")),
        post_injury_gap=int(cfg.get("cohort", "post_injury_gap")),
    )


def _baseline_config(cfg: RunConfig) -> dict:
    return dict(baselines.DEFAULT_CONFIGS[str(cfg.get("model", "family"))])


# -- stages -------------------------------------------------------------------


def stage_simulate(cfg: RunConfig, run_dir: Path) -> None:
    spec = default_spec(
        n_hazard=int(cfg.get("simulate", "n_hazard_features")),
        n_noise=int(cfg.get("simulate", "n_noise_features")),
        hazard_weight=float(cfg.get("simulate", "hazard_weight")),
        base_rate=float(cfg.get("simulate", "base_rate")),
        seed=int(cfg.get("simulate", "seed")),
        missing_rate_subjective=float(cfg.get("simulate", "missing_rate_subjective")),
        missing_rate_objective=float(cfg.get("simulate", "missing_rate_objective")),
    )
    panel, injuries = generate(
        int(cfg.get("simulate", "n_players")), int(cfg.get("simulate", "n_days")), spec
    )
    _atomic_csv(run_dir / "monitoring.csv", lambda p: write_monitoring_csv(panel_to_records(panel), p))
    _atomic_csv(run_dir / "injuries.csv", lambda p: write_injury_csv(injuries, p))
    atomic_write_json(
        run_dir / "synthetic_spec.json",
        {
            "schema_version": SCHEMA_VERSION,
            "base_rate": spec.base_rate,
            "ar_coef": spec.ar_coef,
            "player_offset_sd": spec.player_offset_sd,
            "noise_sd": spec.noise_sd,
            "seed": spec.seed,
            "features": [
                {
                    "name": f.name,
                    "center": f.center,
                    "scale": f.scale,
                    "weight": f.weight,
                    "group": f.group,
                }
                for f in spec.features
            ],
        },
    )
    log.info("simulated %d injuries over %d players", len(injuries), panel.n_players)


def stage_ingest(cfg: RunConfig, run_dir: Path) -> None:
    mon_path, inj_path = _data_paths(cfg, run_dir)
    records = parse_monitoring_csv(mon_path)
    kept, report = clean(records)
    injuries = parse_injury_reports(inj_path)
    _atomic_csv(run_dir / "cleaned.csv", lambda p: write_monitoring_csv(kept, p))
    _atomic_csv(run_dir / "rejections.csv", report.write_csv)
    _atomic_csv(run_dir / "injuries_clean.csv", lambda p: write_injury_csv(injuries, p))
    atomic_write_json(
        run_dir / "cleaning_summary.json",
        {
            "schema_version": SCHEMA_VERSION,
            "input_rows": report.input_rows,
            "retained_rows": report.retained_rows,
            "rejected_rows": report.rejected_rows,
            "rule_counts": report.rule_counts,
        },
    )


def stage_features(cfg: RunConfig, run_dir: Path) -> None:
    records = parse_monitoring_csv(_need(run_dir, "cleaned.csv", "ingest"))
    injuries = parse_injury_reports(_need(run_dir, "injuries_clean.csv", "ingest"))
    panel = derive_features(build_raw_panel(records), injuries)
    _atomic_csv(run_dir / "panel.csv", panel.to_csv)


def stage_impute(cfg: RunConfig, run_dir: Path) -> None:
    panel = _load_panel(run_dir, "panel.csv", "features")
    injuries = parse_injury_reports(_need(run_dir, "injuries_clean.csv", "ingest"))
    method = str(cfg.get("pipeline", "imputation"))
    imputed = IMPUTERS[method](panel)
    diag = diagnostics(panel, imputed, injuries)
    imputed, dropped = drop_high_missingness(imputed, float(cfg.get("pipeline", "drop_threshold")))
    _atomic_csv(run_dir / "panel_imputed.csv", imputed.to_csv)
    _atomic_csv(run_dir / "imputation_diagnostics.csv", diag.write_csv)
    atomic_write_json(
        run_dir / "dropped_features.json",
        {"schema_version": SCHEMA_VERSION, "method": method, "dropped": dropped},
    )


def stage_build(cfg: RunConfig, run_dir: Path) -> None:
    panel = _load_panel(run_dir, "panel_imputed.csv", "impute")
    injuries = parse_injury_reports(_need(run_dir, "injuries_clean.csv", "ingest"))
    survival = _survival_samples(cfg, panel, injuries)
    binary = build_binary_samples(
        panel,
        injuries,
        lookback=int(cfg.get("cohort", "binary_lookback")),
        horizon=int(cfg.get("cohort", "binary_horizon")),
    )
    _atomic_csv(
        run_dir / "samples_survival.csv",
        lambda p: write_survival_csv(survival, panel.feature_names, p),
    )
    _atomic_csv(
        run_dir / "samples_binary.csv",
        lambda p: write_binary_csv(binary, panel.feature_names, p),
    )


def stage_train(cfg: RunConfig, run_dir: Path) -> None:
    panel = _load_panel(run_dir, "panel_imputed.csv", "impute")
    injuries = parse_injury_reports(_need(run_dir, "injuries_clean.csv", "ingest"))
    family = str(cfg.get("model", "family"))
    fraction = float(cfg.get("cohort", "train_fraction"))
    if family == "deephit":
        samples = _survival_samples(cfg, panel, injuries)
        train, _ = chronological_split(samples, fraction)
        scaler = fit_scaler(train)
        model = train_deephit(apply_scaler(scaler, train), _mlp_config(cfg), _dh_config(cfg))
        model.feature_names = list(panel.feature_names)
        model.scaler = scaler
        model.lookback = int(cfg.get("cohort", "lookback"))
        _atomic_csv(run_dir / "model.json", model.save)
        atomic_write_json(
            run_dir / "training_history.json",
            {"schema_version": SCHEMA_VERSION, "epochs": model.history},
        )
    else:
        binary = build_binary_samples(
            panel,
            injuries,
            lookback=int(cfg.get("cohort", "binary_lookback")),
            horizon=int(cfg.get("cohort", "binary_horizon")),
        )
        train, _ = chronological_split(binary, fraction)
        scaler = fit_scaler(train)
        balanced = oversample_minority(apply_scaler(scaler, train), int(cfg.get("model", "seed")))
        config = _baseline_config(cfg)
        model = baselines.fit_family(family, balanced, config, int(cfg.get("model", "seed")))
        payload = {
            "schema_version": SCHEMA_VERSION,
            "family": family,
            "config": config,
            "seed": int(cfg.get("model", "seed")),
            "feature_names": panel.feature_names,
        }
        if family == "logreg":
            payload["weights"] = model.weights.tolist()
            payload["bias"] = model.bias
        atomic_write_json(run_dir / "baseline_model.json", payload)


def stage_evaluate(cfg: RunConfig, run_dir: Path) -> None:
    panel = _load_panel(run_dir, "panel_imputed.csv", "impute")
    injuries = parse_injury_reports(_need(run_dir, "injuries_clean.csv", "ingest"))
    family = str(cfg.get("model", "family"))
    fraction = float(cfg.get("cohort", "train_fraction"))
    metrics: dict = {
        "schema_version": SCHEMA_VERSION,
        "model": family,
        "run_id": cfg.run_id(),
    }
    existing = run_dir / "metrics.json"
    if existing.exists():  # keep the lopo section written by that stage
        prior = read_json(existing)
        if "lopo" in prior:
            metrics["lopo"] = prior["lopo"]
    if family == "deephit":
        model = DeepHitModel.load(_need(run_dir, "model.json", "train"))
        samples = _survival_samples(cfg, panel, injuries)
        _, test = chronological_split(samples, fraction)
        test_std = apply_scaler(model.scaler, test)
        X, t, e = survival_arrays(test_std)
        scores = model.risk_scores(X)
        metrics["chronological"] = {
            "c_index": c_index(scores, t, e),
            "n_test": len(test),
            "n_test_events": int(e.sum()),
            "imputation": str(cfg.get("pipeline", "imputation")),
        }
        entries = []
        for player in panel.players:
            for date, curve in daily_risk_series(model, panel, player):
                entries.append(
                    {
                        "player_id": player,
                        "date": date.isoformat(),
                        "pmf": curve.pmf.tolist(),
                        "cif": curve.cif.tolist(),
                        "risk_score": risk_score(curve),
                    }
                )
        atomic_write_json(
            run_dir / "risk_curves.json",
            {"schema_version": SCHEMA_VERSION, "entries": entries},
        )
    else:
        binary = build_binary_samples(
            panel,
            injuries,
            lookback=int(cfg.get("cohort", "binary_lookback")),
            horizon=int(cfg.get("cohort", "binary_horizon")),
        )
        train, test = chronological_split(binary, fraction)
        scaler = fit_scaler(train)
        train = apply_scaler(scaler, train)
        test = apply_scaler(scaler, test)
        balanced = oversample_minority(train, int(cfg.get("model", "seed")))
        model = baselines.fit_family(
            family, balanced, _baseline_config(cfg), int(cfg.get("model", "seed"))
        )
        probas = model.predict_proba(np.stack([s.x for s in test]))
        m = binary_metrics(probas, [s.label for s in test])
        metrics["chronological"] = {
            **m,
            "weighted_score": baselines.weighted_score(m, _scorer(cfg)),
            "n_test": len(test),
            "n_test_positives": int(sum(s.label for s in test)),
        }
        if bool(cfg.get("model", "grid")):
            from .baselines.search import DEFAULT_GRIDS, write_leaderboard_csv

            best, board = baselines.grid_search(
                family,
                DEFAULT_GRIDS[family],
                binary,
                weights=_scorer(cfg),
                seed=int(cfg.get("model", "seed")),
                split_fraction=fraction,
            )
            metrics["grid_best_config"] = best
            _atomic_csv(run_dir / "leaderboard.csv", lambda p: write_leaderboard_csv(board, p))
    atomic_write_json(run_dir / "metrics.json", metrics)


def _lopo_fit_predict(cfg: RunConfig, family: str):
    if family == "deephit":

        def fit_predict(train, test):
            scaler = fit_scaler(train)
            model = train_deephit(apply_scaler(scaler, train), _mlp_config(cfg), _dh_config(cfg))
            X, _, _ = survival_arrays(apply_scaler(scaler, test))
            return model.risk_scores(X)

    else:
        config = dict(baselines.DEFAULT_CONFIGS[family])

        def fit_predict(train, test):
            scaler = fit_scaler(train)
            as_binary = [
                BinarySample(s.player_id, s.anchor_date, s.x, s.event)
                for s in apply_scaler(scaler, train)
            ]
            balanced = oversample_minority(as_binary, int(cfg.get("model", "seed")))
            model = baselines.fit_family(family, balanced, config, int(cfg.get("model", "seed")))
            X, _, _ = survival_arrays(apply_scaler(scaler, test))
            return model.predict_proba(X)

    return fit_predict


def stage_lopo(cfg: RunConfig, run_dir: Path) -> None:
    imputed = _load_panel(run_dir, "panel_imputed.csv", "impute")
    observed = _load_panel(run_dir, "panel.csv", "features")  # pre-impute mask
    injuries = parse_injury_reports(_need(run_dir, "injuries_clean.csv", "ingest"))
    family = str(cfg.get("model", "family"))
    samples = _survival_samples(cfg, imputed, injuries)
    folds = lopo_folds(samples)
    report = lopo_evaluate(
        folds,
        _lopo_fit_predict(cfg, family),
        sessions_tracked(observed),
        injury_counts_by_player(injuries, imputed.players),
    )
    _atomic_csv(run_dir / "lopo_report.csv", report.write_csv)
    atomic_write_json(
        run_dir / "lopo.json",
        {"schema_version": SCHEMA_VERSION, "model": family, **report.to_dict()},
    )
    metrics_path = run_dir / "metrics.json"
    metrics = (
        read_json(metrics_path)
        if metrics_path.exists()
        else {"schema_version": SCHEMA_VERSION, "model": family, "run_id": cfg.run_id()}
    )
    metrics["lopo"] = report.to_dict()
    atomic_write_json(metrics_path, metrics)


def _choose_player(cfg: RunConfig, run_dir: Path, panel: FeaturePanel, injuries) -> str:
    choice = str(cfg.get("explain", "player"))
    if choice != "auto":
        if choice not in panel.players:
            raise DataError(f"explain.player {choice!r} not in panel players")
        return choice
    lopo_path = run_dir / "lopo.json"
    if lopo_path.exists():
        rows = read_json(lopo_path)["players"]
        scored = [r for r in rows if r["c_index"] is not None]
        if scored:
            best = max(scored, key=lambda r: (r["c_index"], r["player_id"]))
            return best["player_id"]
    counts = injury_counts_by_player(injuries, panel.players)
    return max(panel.players, key=lambda p: (counts[p], p))


def stage_explain(cfg: RunConfig, run_dir: Path) -> None:
    panel = _load_panel(run_dir, "panel_imputed.csv", "impute")
    injuries = parse_injury_reports(_need(run_dir, "injuries_clean.csv", "ingest"))
    model = DeepHitModel.load(_need(run_dir, "model.json", "train"))
    if str(cfg.get("model", "family")) != "deephit":
        raise ConfigError("explain requires model.family = deephit")
    player = _choose_player(cfg, run_dir, panel, injuries)

    samples = _survival_samples(cfg, panel, injuries)
    train, _ = chronological_split(samples, float(cfg.get("cohort", "train_fraction")))
    train_std = apply_scaler(model.scaler, train)
    rng = np.random.default_rng(int(cfg.get("explain", "seed")))
    size = min(int(cfg.get("explain", "background_size")), len(train_std))
    picks = rng.choice(len(train_std), size=size, replace=False)
    background = np.stack([train_std[i].x for i in picks])

    p = panel.player_index(player)
    lo, hi = panel.obs_range_idx(player)
    eligible = list(range(lo + model.lookback - 1, hi + 1))
    if not eligible:
        raise DataError(f"{player} has no eligible days to explain")
    date_cfg = str(cfg.get("explain", "date"))
    if date_cfg:
        days = [panel.date_index(dt.date.fromisoformat(date_cfg))]
    else:
        max_days = int(cfg.get("explain", "max_days"))
        idx = np.linspace(0, len(eligible) - 1, min(max_days, len(eligible)))
        days = [eligible[i] for i in sorted({int(round(v)) for v in idx})]
    entries = []
    total = np.zeros(panel.n_features)
    for d in days:
        att = day_explanation(
            model,
            panel,
            player,
            panel.start_date + dt.timedelta(days=d),
            background,
            n_coalitions=int(cfg.get("explain", "n_coalitions")),
            seed=int(cfg.get("explain", "seed")),
        )
        entries.append(att.to_dict())
        total += np.abs(att.phi)
    ranked = sorted(
        zip(panel.feature_names, (total / len(days)).tolist()), key=lambda kv: (-kv[1], kv[0])
    )
    atomic_write_json(
        run_dir / "shap.json",
        {
            "schema_version": SCHEMA_VERSION,
            "player_id": player,
            "season_importance": [[name, value] for name, value in ranked],
            "entries": entries,
        },
    )


def stage_report(cfg: RunConfig, run_dir: Path) -> None:
    required = ["metrics.json", "risk_curves.json", "shap.json", "lopo_report.csv"]
    missing = [name for name in required if not (run_dir / name).exists()]
    if missing:
        raise DataError(
            f"report needs {missing} in {run_dir}; run the producing stages first"
        )
    artifacts = {
        name: {"sha256": sha256_file(run_dir / name), "bytes": (run_dir / name).stat().st_size}
        for name in sorted(required)
    }
    atomic_write_json(
        run_dir / "report.json",
        {"schema_version": SCHEMA_VERSION, "run_id": cfg.run_id(), "artifacts": artifacts},
    )


STAGE_FUNCS = {
    "simulate": stage_simulate,
    "ingest": stage_ingest,
    "features": stage_features,
    "impute": stage_impute,
    "build": stage_build,
    "train": stage_train,
    "evaluate": stage_evaluate,
    "lopo": stage_lopo,
    "explain": stage_explain,
    "report": stage_report,
}


# -- argument parsing ---------------------------------------------------------


def _flag_name(section: str, key: str) -> str:
    return f"--{section}-{key}".replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="injurycast",
        description="Injury-risk forecasting pipeline over daily athlete monitoring data",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI run configuration file")
    common.add_argument(
        "--impute",
        dest="pipeline_imputation_alias",
        help="shorthand for --pipeline-imputation {median|bespoke|linear|none}",
    )
    for section, keys in SCHEMA.items():
        for key in keys:
            common.add_argument(
                _flag_name(section, key),
                dest=f"cfg__{section}__{key}",
                help=f"override {section}.{key}",
            )
    sub = parser.add_subparsers(dest="stage", required=True)
    for stage in STAGES:
        sub.add_parser(stage, parents=[common], help=f"run the {stage} stage")
    return parser


def _overrides_from_args(args: argparse.Namespace) -> dict[tuple[str, str], object]:
    overrides: dict[tuple[str, str], object] = {}
    for name, value in vars(args).items():
        if name.startswith("cfg__") and value is not None:
            _, section, key = name.split("__", 2)
            overrides[(section, key)] = value
    if getattr(args, "pipeline_imputation_alias", None) is not None:
        overrides[("pipeline", "imputation")] = args.pipeline_imputation_alias
    return overrides


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    run_dir: Path | None = None
    try:
        cfg = RunConfig.load(args.config, _overrides_from_args(args))
        run_dir = cfg.run_dir()
        run_dir.mkdir(parents=True, exist_ok=True)
        atomic_write_text(run_dir / "config.ini", cfg.canonical_text())
        STAGE_FUNCS[args.stage](cfg, run_dir)
        print(f"{args.stage}: ok ({run_dir})")
        return 0
    except PipelineError as exc:
        record = {
            "error_type": type(exc).__name__,
            "message": str(exc),
            "stage": args.stage,
            "exit_code": exc.exit_code,
        }
        print(json.dumps(record, sort_keys=True), file=sys.stderr)
        if run_dir is not None and run_dir.exists():
            try:
                atomic_write_json(run_dir / "error.json", {"schema_version": SCHEMA_VERSION, **record})
            except OSError:
                pass
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())

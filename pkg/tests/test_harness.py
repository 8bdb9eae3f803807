import json

import pandas as pd
import pytest

from twsbench.core.errors import (
    ConfigError,
    HorizonExceedsSplitError,
    MissingReportError,
    ResolutionMismatchError,
)
from twsbench.dataset.splits import split_series
from twsbench.dataset.synthetic import generate_synthetic
from twsbench.dataset.types import SplitSpec
from twsbench.harness.config import ExperimentConfig, load_experiment_config, resolve_train_config
from twsbench.harness.pipelines import run_experiment
from twsbench.harness.report import load_report_table

LINEAR = ["Linear_single", "Linear_glob"]
TINY_NEURAL = {"max_epochs": 2, "hidden_size": 8, "d_model": 8, "nheads": 2, "batch_size": 64}


def _config(tmp_path, name="report", **kwargs):
    params = {"n_basins": 3, "models": LINEAR, "seed": 3, "out": str(tmp_path / name)}
    params.update(kwargs)
    return ExperimentConfig(**params)


def test_tournament_writes_report(tmp_path):
    result, report_dir = run_experiment(_config(tmp_path))

    for name in (
        "metrics.csv",
        "significance.csv",
        "rankings.csv",
        "best_counts.csv",
        "skill_delta.csv",
        "coefficients.csv",
        "cdf_nse.csv",
        "features/linear.json",
        "manifest.json",
        "timing.json",
    ):
        assert (report_dir / name).exists(), name
    assert not (report_dir / "models").exists()

    metrics = load_report_table(report_dir, "metrics.csv")
    assert sorted(metrics["basin_id"].unique()) == ["B0001", "B0002", "B0003"]
    assert set(metrics["model"]) == set(LINEAR)
    assert set(result.summary()["model"]) == set(LINEAR)

    with open(report_dir / "manifest.json") as f:
        manifest = json.load(f)
    assert manifest["example_counts"]["linear"]["splits"] == {"train": 3 * 144, "test": 3 * 48}
    assert manifest["seed"] == 3


def test_single_model_has_no_comparisons(tmp_path):
    _, report_dir = run_experiment(_config(tmp_path, models=["Linear_single"]))
    assert (report_dir / "metrics.csv").exists()
    assert not (report_dir / "significance.csv").exists()
    assert not (report_dir / "rankings.csv").exists()


def test_reruns_are_identical(tmp_path):
    _, first = run_experiment(_config(tmp_path, "first"))
    _, second = run_experiment(_config(tmp_path, "second"))
    for name in ("metrics.csv", "rankings.csv", "significance.csv", "coefficients.csv", "features/linear.json"):
        assert (first / name).read_bytes() == (second / name).read_bytes(), name


def test_rerun_replaces_report(tmp_path):
    config = _config(tmp_path)
    _, report_dir = run_experiment(config)
    (report_dir / "stale.csv").write_text("x\n")
    run_experiment(config)
    assert not (report_dir / "stale.csv").exists()
    assert not [p for p in tmp_path.iterdir() if p.name.startswith(".report-")]


def test_save_models(tmp_path):
    _, report_dir = run_experiment(_config(tmp_path, save_models=True))
    assert (report_dir / "models" / "Linear_glob" / "lead1.json").exists()
    assert len(list((report_dir / "models" / "Linear_single" / "lead1").glob("*.json"))) == 3


def test_forecast_sweep_reports_every_lead(tmp_path):
    _, report_dir = run_experiment(_config(tmp_path, experiment="forecast_sweep", horizon=3))
    metrics = load_report_table(report_dir, "metrics.csv")
    assert sorted(metrics["lead"].unique()) == [1, 2, 3]
    rankings = load_report_table(report_dir, "rankings.csv")
    assert sorted(rankings["lead"].unique()) == [1, 2, 3]


def test_forecast_lead_one_matches_tournament(tmp_path):
    tournament, _ = run_experiment(_config(tmp_path), write=False)
    forecast, _ = run_experiment(_config(tmp_path, experiment="forecast_sweep", horizon=6), write=False)

    metrics = forecast.table("metrics.csv")
    lead_one = metrics[metrics["lead"] == 1].drop(columns=["experiment", "lead"]).reset_index(drop=True)
    expected = tournament.table("metrics.csv").drop(columns="experiment")
    pd.testing.assert_frame_equal(lead_one, expected, check_exact=True)

    counts = forecast.manifest.example_counts
    assert counts["linear_lead1"]["splits"] == {"train": 3 * 144, "test": 3 * 48}
    assert counts["linear_lead6"]["splits"] == {"train": 3 * 139, "test": 3 * 43}


def test_daily_smoothed_run(tmp_path):
    config = _config(tmp_path, experiment="daily_smoothed", n_basins=2, seq_len=30, daily_stride=10)
    result, report_dir = run_experiment(config)

    metrics = load_report_table(report_dir, "metrics.csv")
    assert sorted(metrics["basin_id"].unique()) == ["B0001", "B0002"]
    assert set(metrics["model"]) == set(LINEAR)
    with open(report_dir / "manifest.json") as f:
        manifest = json.load(f)
    assert manifest["feature_manifests"]["linear"]["resolution"] == "daily"
    assert manifest["example_counts"]["linear"]["splits"] == {"train": 2 * 472, "test": 2 * 180}

    # first test target: 30-day trailing mean inside the test period
    series = generate_synthetic(config.synthetic_config())[0]
    raw = split_series(series, SplitSpec.linear())["test"].target
    test = result.extras["bundles"][""].sets["linear"]["test"]
    assert str(test.target_dates[0, 0]) == "2016-01-31"
    assert test.targets_raw[0, 0] == pytest.approx(raw[1:31].mean(), rel=1e-12)


def test_daily_smoothed_defaults_to_a_year_of_input():
    assert ExperimentConfig(experiment="daily_smoothed").resolved_seq_len() == 365


def test_daily_smoothed_needs_daily_series(tmp_path):
    config = _config(tmp_path, experiment="daily_smoothed", n_basins=None, synthetic={"n_basins": 2, "seed": 1})
    with pytest.raises(ResolutionMismatchError):
        run_experiment(config, write=False)


def test_seq_len_sweep_attribution(tmp_path):
    _, report_dir = run_experiment(_config(tmp_path, experiment="seq_len_sweep", seq_lens=[6, 9]))
    attribution = load_report_table(report_dir, "attribution.csv")
    assert len(attribution) == 2 * (6 + 9)
    assert set(attribution["method"]) == {"occlusion"}
    assert (report_dir / "features" / "linear_L6.json").exists()
    assert (report_dir / "features" / "linear_L9.json").exists()


def test_tree_baselines_with_small_grids(tmp_path):
    grids = {
        "rf": {"n_estimators": [3], "max_depth": [2, 3]},
        "gbm": {"n_estimators": [5], "max_depth": [2], "learning_rate": [0.1]},
    }
    _, report_dir = run_experiment(
        _config(tmp_path, experiment="tree_baselines", models=["Linear_single", "RF", "GBM"], grids=grids)
    )
    params = load_report_table(report_dir, "best_params.csv")
    assert len(params) == 2 * 3
    assert set(params[params["model"] == "RF"]["max_depth"].astype(int)) <= {2, 3}


def test_neural_tournament(tmp_path):
    config = _config(tmp_path, n_basins=2, models=["Linear_single", "LSTM", "TFT-lite"], neural=TINY_NEURAL)
    result, report_dir = run_experiment(config)
    assert set(result.table("metrics.csv")["model"]) == {"Linear_single", "LSTM", "TFT-lite"}
    assert (report_dir / "features" / "neural.json").exists()
    with open(report_dir / "manifest.json") as f:
        counts = json.load(f)["example_counts"]
    assert counts["neural"]["splits"] == {"train": 2 * 108, "validation": 2 * 24, "test": 2 * 48}


def test_time_index_ablation_tables(tmp_path):
    config = _config(
        tmp_path, experiment="time_index_ablation", variant="da-like", n_basins=2, models=None, neural=TINY_NEURAL
    )
    result, report_dir = run_experiment(config)
    ablation = load_report_table(report_dir, "ablation_table.csv")
    assert set(ablation["model"]) == {"TFT-lite", "TFT-lite_no_timeidx"}
    assert "all" in set(ablation["stratum"])
    assert (report_dir / "timeseries" / "B0001.csv").exists()
    series = load_report_table(report_dir, "timeseries/B0002.csv")
    assert list(series.columns) == ["date", "truth", "Linear_single", "TFT-lite", "TFT-lite_no_timeidx"]


def test_experiment_on_dataset_directory(tmp_path, dataset_dir):
    _, report_dir = run_experiment(_config(tmp_path, dataset=str(dataset_dir), n_basins=None))
    with open(report_dir / "manifest.json") as f:
        manifest = json.load(f)
    assert manifest["feature_manifests"]["linear"]["provenance"]["dataset"] == str(dataset_dir)


@pytest.mark.parametrize(
    "params",
    [
        {"models": ["Linear_single", "XGB"]},
        {"models": []},
        {"models": ["Linear_single", "Linear_single"]},
        {"experiment": "tree_baselines", "models": ["Linear_single", "LSTM"]},
        {"experiment": "regression_tournament", "horizon": 3},
        {"experiment": "seq_len_sweep", "seq_len": 12},
        {"variant": "real"},
        {"workers": 0},
        {"grids": {"xgb": {"n_estimators": [1]}}},
    ],
)
def test_invalid_configs(params):
    with pytest.raises(ConfigError):
        ExperimentConfig(**params)


def test_horizon_must_fit_the_split(tmp_path):
    with pytest.raises(HorizonExceedsSplitError):
        run_experiment(_config(tmp_path, experiment="forecast_sweep", seq_len=12, horizon=50), write=False)


def test_load_experiment_config_flags_win(tmp_path):
    path = tmp_path / "exp.yaml"
    path.write_text("experiment: forecast_sweep\nhorizon: 4\nseed: 1\n")
    config = load_experiment_config(path, seed=9, models=None)
    assert (config.experiment, config.horizon, config.seed) == ("forecast_sweep", 4, 9)

    bad = tmp_path / "exp.toml"
    bad.write_text("seed = 1\n")
    with pytest.raises(ConfigError):
        load_experiment_config(bad)


def test_resolve_train_config_columns():
    paper = resolve_train_config("tft", ExperimentConfig(profile="paper", variant="da-like"))
    desk = resolve_train_config("tft", ExperimentConfig(profile="desk", variant="da-like"))
    assert paper.learning_rate == desk.learning_rate
    assert desk.hidden_size == 32 and desk.nheads == 4 and desk.max_epochs == 50

    tuned = resolve_train_config("lstm", ExperimentConfig(neural={"hidden_size": 5, "d_model": 7}))
    assert tuned.hidden_size == 5


def test_missing_report(tmp_path):
    with pytest.raises(MissingReportError):
        load_report_table(tmp_path / "nowhere", "metrics.csv")


@pytest.mark.slow
def test_heterogeneous_basins_favor_per_basin_models():
    synthetic = {"n_basins": 20, "two_regime": True, "seed": 11}
    result, _ = run_experiment(ExperimentConfig(models=LINEAR, synthetic=synthetic), write=False)
    summary = result.summary().set_index("model")
    assert summary.loc["Linear_single", "nse"] > summary.loc["Linear_glob", "nse"]

    significance = result.table("significance.csv")
    one_sided = significance[(significance["metric"] == "nse") & (significance["alternative"] == "greater")]
    assert one_sided.iloc[0]["p"] < 0.05

    coefficients = result.table("coefficients.csv")
    outside = (coefficients["global"] < coefficients["q1"]) | (coefficients["global"] > coefficients["q3"])
    assert outside.any()


@pytest.mark.slow
def test_forecast_skill_degrades_with_lead():
    config = ExperimentConfig(experiment="forecast_sweep", models=["Linear_single"], n_basins=20, seed=8)
    result, _ = run_experiment(config, write=False)
    metrics = result.table("metrics.csv")
    rmse = metrics[metrics["metric"] == "rmse"].pivot(index="basin_id", columns="lead", values="value")
    assert (rmse[6] >= rmse[1]).mean() >= 0.9


def test_worker_count_does_not_change_results(tmp_path):
    _, serial = run_experiment(_config(tmp_path, "serial"))
    _, pooled = run_experiment(_config(tmp_path, "pooled", workers=2))
    for name in ("metrics.csv", "rankings.csv", "coefficients.csv"):
        assert (serial / name).read_bytes() == (pooled / name).read_bytes(), name


@pytest.mark.slow
def test_time_index_helps_trending_basins():
    config = ExperimentConfig(
        experiment="time_index_ablation",
        variant="da-like",
        n_basins=16,
        neural={"max_epochs": 30, "d_model": 16, "nheads": 2},
        seed=5,
    )
    result, _ = run_experiment(config, write=False)
    ablation = result.table("ablation_table.csv")
    negative = ablation[(ablation["stratum"] == "negative") & (ablation["metric"] == "rmse")].set_index("model")
    assert negative.loc["TFT-lite", "mean"] < negative.loc["TFT-lite_no_timeidx", "mean"]


def _significance_row(significance, model_a, model_b, metric, alternative):
    picked = significance[
        (significance["model_a"] == model_a)
        & (significance["model_b"] == model_b)
        & (significance["metric"] == metric)
        & (significance["alternative"] == alternative)
    ]
    assert len(picked) >= 1
    return picked.iloc[0]


@pytest.mark.slow
def test_homogeneous_basins_do_not_separate_linear_models():
    synthetic = {"n_basins": 10, "target_seasonal_amplitude": 0.0, "noise_scale": 10.0, "seed": 12}
    result, _ = run_experiment(ExperimentConfig(models=LINEAR, synthetic=synthetic, seq_len=3), write=False)
    row = _significance_row(result.table("significance.csv"), "Linear_single", "Linear_glob", "nse", "two-sided")
    assert row["p"] > 0.05


@pytest.mark.slow
def test_linear_world_favors_linear_model():
    grids = {
        "rf": {"n_estimators": [30], "max_depth": [6]},
        "gbm": {"n_estimators": [100], "max_depth": [3], "learning_rate": [0.1]},
    }
    config = ExperimentConfig(experiment="tree_baselines", n_basins=10, grids=grids, seed=13)
    result, _ = run_experiment(config, write=False)
    summary = result.summary().set_index("model")
    assert summary.loc["Linear_single", "nse"] > summary.loc["RF", "nse"]
    assert summary.loc["Linear_single", "nse"] > summary.loc["GBM", "nse"]


@pytest.mark.slow
def test_threshold_world_favors_boosting():
    synthetic = {
        "n_basins": 10,
        "nonlinearity": "threshold",
        "mixing_weights": {"precip": 0.8, "temp": 0.0, "lai": 0.0, "ssmc": 0.0},
        "target_seasonal_amplitude": 0.0,
        "seed": 14,
    }
    grids = {"gbm": {"n_estimators": [100], "max_depth": [3], "learning_rate": [0.1]}}
    config = ExperimentConfig(
        experiment="tree_baselines", models=["Linear_single", "GBM"], synthetic=synthetic, grids=grids
    )
    result, _ = run_experiment(config, write=False)
    summary = result.summary().set_index("model")
    assert summary.loc["GBM", "nse"] > summary.loc["Linear_single", "nse"]


@pytest.mark.slow
def test_time_index_is_neutral_on_stationary_basins():
    config = ExperimentConfig(
        experiment="time_index_ablation",
        variant="ol-like",
        n_basins=12,
        neural={"max_epochs": 20, "d_model": 16, "nheads": 2},
        seed=15,
    )
    result, _ = run_experiment(config, write=False)
    significance = result.table("significance.csv")
    twins = significance[significance["stratum"] == "all"]
    row = _significance_row(twins, "TFT-lite", "TFT-lite_no_timeidx", "rmse", "two-sided")
    assert row["p"] > 0.05

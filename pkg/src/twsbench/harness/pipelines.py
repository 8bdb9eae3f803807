"""
Experiment pipelines.

Each run_* function loads (or synthesizes) the basins, assembles the
supervised sets its models need, fits, evaluates on the test period and
returns an ExperimentResult. Nothing touches disk until run_experiment
hands a complete result to the ReportWriter.
"""

import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import pandas as pd
from loguru import logger

from twsbench.config.settings import settings
from twsbench.core.errors import (
    ConfigError,
    EmptySampleError,
    HorizonExceedsSplitError,
    InsufficientHistoryError,
    ResolutionMismatchError,
)
from twsbench.core.manifest import RunManifest, inputs_checksum, series_checksum
from twsbench.dataset.loader import load_basin_series
from twsbench.dataset.splits import split_series
from twsbench.dataset.storage import get_output_paths
from twsbench.dataset.synthetic import generate_synthetic
from twsbench.dataset.types import BasinSeries, SplitSpec
from twsbench.evaluation.attribution import (
    attribution_frame,
    coefficient_distribution,
    coefficient_frame,
    mean_attention,
    occlusion_importance,
)
from twsbench.evaluation.comparison import cdf_frame, compare_models, significance_rows
from twsbench.evaluation.metrics import evaluate_basins
from twsbench.evaluation.ranking import best_counts, rank_models, skill_difference
from twsbench.evaluation.summaries import trend_strata
from twsbench.features.assemble import SupervisedSet, TaskSpec, assemble_supervised
from twsbench.harness.config import ExperimentConfig, resolve_train_config
from twsbench.harness.models import (
    fit_linear_glob_model,
    fit_linear_single_model,
    fit_neural_models,
    fit_tree_model,
    predict_physical,
)
from twsbench.harness.report import ExperimentResult, ReportWriter
from twsbench.models.classical.grid_search import GridSearchSpec
from twsbench.utils.constants import (
    BOOSTED,
    DAILY,
    HIGHER_IS_BETTER,
    LINEAR_GLOB,
    LINEAR_SINGLE,
    LSTM,
    METRICS,
    NEURAL_MODELS,
    RANDOM_FOREST,
    TESTED_METRICS,
    TFT_LITE,
    TFT_LITE_NO_TIME,
)

TREE_FAMILIES = {RANDOM_FOREST: "rf", BOOSTED: "gbm"}
ABLATION_METRICS = ("bias", "rmse", "corr", "nse", "kge")
NEGATIVE = "negative"


@dataclass
class _Inputs:
    series: List[BasinSeries]
    input_hash: str
    source: Dict[str, Any]
    strata: Dict[str, str]
    started: float = field(default_factory=time.perf_counter)


@dataclass
class _Bundle:
    """Fits of one task plus the supervised set each model was trained on."""

    fits: Dict[str, Any] = field(default_factory=dict)
    sets: Dict[str, SupervisedSet] = field(default_factory=dict)
    model_set: Dict[str, str] = field(default_factory=dict)
    seconds: Dict[str, float] = field(default_factory=dict)

    def sset(self, model: str) -> SupervisedSet:
        return self.sets[self.model_set[model]]


def load_inputs(config: ExperimentConfig) -> _Inputs:
    """Basins from the dataset directory, or from the synthetic generator."""
    if config.dataset is not None:
        dynamic_path, static_path = get_output_paths(config.dataset)
        series = load_basin_series(dynamic_path, static_path)
        input_hash = inputs_checksum([dynamic_path, static_path])
        source = {"dataset": str(config.dataset)}
    else:
        synthetic = config.synthetic_config()
        series = generate_synthetic(synthetic)
        input_hash = series_checksum(series)
        source = {"synthetic": synthetic.model_dump(mode="json")}
    logger.info(f"Loaded {len(series)} basins ({config.variant}) for {config.experiment}")
    return _Inputs(series=series, input_hash=input_hash, source=source, strata=trend_strata(series))


def _split_specs(models: Sequence[str]) -> Dict[str, SplitSpec]:
    specs = {}
    if any(m not in NEURAL_MODELS for m in models):
        specs["linear"] = SplitSpec.linear()
    if any(m in NEURAL_MODELS for m in models):
        specs["neural"] = SplitSpec.neural()
    return specs


def check_windows(series: Sequence[BasinSeries], task: TaskSpec, specs: Dict[str, SplitSpec]) -> None:
    """Fail before any fitting when some split cannot hold one window of the task."""
    for s in series:
        for label, spec in specs.items():
            for name, view in split_series(s, spec).items():
                room = len(view) - task.first_target()
                if room < 1:
                    raise InsufficientHistoryError(
                        f"basin {s.basin_id}: {label} {name} split has {len(view)} steps, "
                        f"too few for seq_len={task.seq_len}"
                    )
                if room < task.horizon:
                    raise HorizonExceedsSplitError(
                        f"basin {s.basin_id}: horizon {task.horizon} does not fit the {label} {name} split"
                    )


def _grid_spec(family: str, config: ExperimentConfig) -> GridSearchSpec:
    if family in config.grids:
        return GridSearchSpec(grid=config.grids[family])
    return GridSearchSpec.for_family(family)


def fit_models(
    models: Sequence[str],
    task: TaskSpec,
    inputs: _Inputs,
    config: ExperimentConfig,
    label: str = "",
    leads: Optional[Sequence[int]] = None,
) -> _Bundle:
    """
    Assemble the needed supervised sets and fit every requested model.

    `leads` (0-based) restricts the linear models to those target columns;
    neural models always fit every lead of the task.
    """
    specs = _split_specs(models)
    check_windows(inputs.series, task, specs)
    bundle = _Bundle()
    provenance = {"variant": config.variant, **inputs.source}
    for kind, spec in specs.items():
        bundle.sets[f"{kind}{label}"] = assemble_supervised(inputs.series, task, spec, provenance=provenance)

    linear_key, neural_key = f"linear{label}", f"neural{label}"
    neural_specs = {}
    for name in models:
        started = time.perf_counter()
        if name in NEURAL_MODELS:
            bundle.model_set[name] = neural_key
            kind = "lstm" if name == LSTM else "tft"
            neural_specs[name] = (kind, resolve_train_config(kind, config, use_time_index=name != TFT_LITE_NO_TIME))
            continue
        bundle.model_set[name] = linear_key
        sset = bundle.sets[linear_key]
        if name == LINEAR_SINGLE:
            bundle.fits[name] = fit_linear_single_model(sset, name, workers=config.workers, leads=leads)
        elif name == LINEAR_GLOB:
            bundle.fits[name] = fit_linear_glob_model(sset, name, leads=leads)
        else:
            family = TREE_FAMILIES[name]
            bundle.fits[name] = fit_tree_model(
                sset, name, family, _grid_spec(family, config), seed=config.seed, workers=config.workers
            )
        bundle.seconds[name] = time.perf_counter() - started

    if neural_specs:
        neural = fit_neural_models(bundle.sets[neural_key], neural_specs, workers=config.workers)
        for name, fit in neural.items():
            bundle.fits[name] = fit
            bundle.seconds[name] = fit.result.seconds
    bundle.fits = {name: bundle.fits[name] for name in models}
    return bundle


def evaluate_bundle(
    bundle: _Bundle,
    experiment: str,
    per_lead: bool = False,
    extra: Optional[Dict[str, Any]] = None,
    leads: Optional[Sequence[int]] = None,
) -> pd.DataFrame:
    frames = []
    for name, fit in bundle.fits.items():
        sset = bundle.sset(name)
        split = sset["test"]
        predicted = predict_physical(fit, sset)
        evaluated = range(sset.task.horizon) if leads is None else leads
        for lead in evaluated:
            frame = evaluate_basins(
                split.basin_ids,
                split.targets_raw[:, lead],
                predicted[:, lead],
                name,
                experiment,
                lead=lead + 1 if per_lead else None,
            )
            for column, value in (extra or {}).items():
                frame.insert(3, column, value)
            frames.append(frame)
    return pd.concat(frames, ignore_index=True)


def _compare(table, model_a, model_b, metric, alternative, basins=None):
    try:
        return compare_models(table, model_a, model_b, metric, alternative, basins=basins)
    except EmptySampleError:
        logger.warning(f"{model_a} vs {model_b}: no defined {metric} values; test skipped")
        return None


def _one_sided(metric: str) -> str:
    """Alternative under which the reference model is the better one."""
    return "greater" if metric in HIGHER_IS_BETTER else "less"


def comparison_tables(
    metrics: pd.DataFrame,
    models: Sequence[str],
    strata: Dict[str, str],
    group: Optional[str] = None,
    reference: str = LINEAR_SINGLE,
) -> Dict[str, pd.DataFrame]:
    """
    CDF, significance, ranking, best-count and skill-delta tables; when
    `group` names a column (lead, seq_len) every table is computed per group.
    """
    groups = [(None, metrics)] if group is None else list(metrics.groupby(group, sort=True))
    parts: Dict[str, List[pd.DataFrame]] = {}

    def add(name: str, frame: pd.DataFrame, key) -> None:
        if group is not None:
            frame = frame.copy()
            frame.insert(0, group, key)
        parts.setdefault(name, []).append(frame)

    for key, table in groups:
        for metric in METRICS:
            add(f"cdf_{metric}.csv", cdf_frame(table, metric, models), key)
        if len(models) < 2:
            continue

        rows = []
        if reference in models:
            for other in [m for m in models if m != reference]:
                for metric in TESTED_METRICS:
                    for alternative in ("two-sided", _one_sided(metric)):
                        result = _compare(table, reference, other, metric, alternative)
                        if result is not None:
                            rows.append(significance_rows(reference, other, metric, result))
        add("significance.csv", pd.DataFrame(rows), key)

        rankings = pd.concat([rank_models(table, metric, models) for metric in ("nse", "kge")], ignore_index=True)
        rankings["stratum"] = rankings["basin_id"].map(strata)
        add("rankings.csv", rankings, key)
        counts = pd.concat([best_counts(rankings), best_counts(rankings, strata)], ignore_index=True)
        add("best_counts.csv", counts, key)

        if reference in models:
            deltas = pd.concat(
                [skill_difference(table, reference, metric) for metric in TESTED_METRICS], ignore_index=True
            )
            add("skill_delta.csv", deltas, key)

    return {name: pd.concat(frames, ignore_index=True) for name, frames in parts.items() if not _empty(frames)}


def _empty(frames: List[pd.DataFrame]) -> bool:
    return all(frame.empty for frame in frames)


def _result(
    config: ExperimentConfig,
    inputs: _Inputs,
    tables: Dict[str, pd.DataFrame],
    bundles: Dict[str, _Bundle],
    notes: Optional[List[str]] = None,
    extras: Optional[Dict[str, Any]] = None,
) -> ExperimentResult:
    feature_manifests, counts, fit_seconds = {}, {}, {}
    for key, bundle in bundles.items():
        for label, sset in bundle.sets.items():
            feature_manifests[label] = sset.manifest()
            counts[label] = {"splits": sset.example_counts(), "per_basin": sset.examples_per_basin()}
        for name, seconds in bundle.seconds.items():
            fit_seconds[f"{name}{key}"] = seconds

    manifest = RunManifest(
        experiment=config.experiment,
        config=config.model_dump(mode="json"),
        seed=config.seed,
        input_hash=inputs.input_hash,
        feature_manifests=feature_manifests,
        example_counts=counts,
        notes=list(notes or []),
    )
    timing = {"total_seconds": time.perf_counter() - inputs.started, "fit_seconds": fit_seconds}
    return ExperimentResult(
        experiment=config.experiment,
        tables=tables,
        manifest=manifest,
        timing=timing,
        extras={
            "bundles": bundles,
            "strata": inputs.strata,
            "save_models": config.save_models,
            **(extras or {}),
        },
    )


def _coefficient_table(bundle: _Bundle) -> Optional[pd.DataFrame]:
    if LINEAR_SINGLE not in bundle.fits or LINEAR_GLOB not in bundle.fits:
        return None
    summaries = coefficient_distribution(
        bundle.fits[LINEAR_SINGLE].basin_models(0), bundle.fits[LINEAR_GLOB].models[0]
    )
    return coefficient_frame(summaries)


def run_regression_tournament(config: ExperimentConfig) -> ExperimentResult:
    """One-step TWS regression for the linear and neural models."""
    inputs = load_inputs(config)
    models = config.model_list()
    task = TaskSpec.regression(seq_len=config.resolved_seq_len(), climatology=config.climatology)
    bundle = fit_models(models, task, inputs, config)

    metrics = evaluate_bundle(bundle, config.experiment)
    tables = {"metrics.csv": metrics, **comparison_tables(metrics, models, inputs.strata)}
    coefficients = _coefficient_table(bundle)
    if coefficients is not None:
        tables["coefficients.csv"] = coefficients
    return _result(config, inputs, tables, {"": bundle})


def run_seq_len_sweep(config: ExperimentConfig) -> ExperimentResult:
    """Regression at every input length, with per-step attributions."""
    inputs = load_inputs(config)
    models = config.model_list()
    longest = TaskSpec.regression(seq_len=max(config.seq_lens))
    check_windows(inputs.series, longest, _split_specs(models))

    bundles, metric_frames, reports = {}, [], []
    for seq_len in config.seq_lens:
        task = TaskSpec.regression(seq_len=seq_len, climatology=config.climatology)
        bundle = fit_models(models, task, inputs, config, label=f"_L{seq_len}")
        bundles[f"_L{seq_len}"] = bundle
        metric_frames.append(evaluate_bundle(bundle, config.experiment, extra={"seq_len": seq_len}))
        for name, fit in bundle.fits.items():
            test = bundle.sset(name)["test"]
            reports.append(occlusion_importance(fit, test, name))
            if name in (TFT_LITE, TFT_LITE_NO_TIME):
                reports.append(mean_attention(fit, test, name))
        logger.info(f"seq_len {seq_len}: {len(bundle.fits)} models evaluated")

    metrics = pd.concat(metric_frames, ignore_index=True)
    tables = {
        "metrics.csv": metrics,
        "attribution.csv": attribution_frame(reports),
        **comparison_tables(metrics, models, inputs.strata, group="seq_len"),
    }
    return _result(config, inputs, tables, bundles)


def run_forecast_sweep(config: ExperimentConfig) -> ExperimentResult:
    """
    Leads 1..H from one window.

    Linear models use the direct strategy: lead h is its own regression on
    every target h steps past the window that lies inside the split, so lead 1
    is exactly the regression_tournament task. Neural models emit all H leads
    at once and train on the targets where the whole horizon fits.
    """
    inputs = load_inputs(config)
    models = config.model_list()
    seq_len, horizon = config.resolved_seq_len(), config.resolved_horizon()
    full = TaskSpec.forecast(seq_len=seq_len, horizon=horizon, climatology=config.climatology)
    check_windows(inputs.series, full, _split_specs(models))

    direct = [m for m in models if m not in NEURAL_MODELS]
    joint = [m for m in models if m in NEURAL_MODELS]
    bundles, frames = {}, []
    if direct:
        for lead in range(1, horizon + 1):
            task = TaskSpec.forecast(seq_len=seq_len, horizon=lead, climatology=config.climatology)
            bundle = fit_models(direct, task, inputs, config, label=f"_lead{lead}", leads=[lead - 1])
            bundles[f"_lead{lead}"] = bundle
            frames.append(evaluate_bundle(bundle, config.experiment, per_lead=True, leads=[lead - 1]))
    if joint:
        bundle = fit_models(joint, full, inputs, config)
        bundles[""] = bundle
        frames.append(evaluate_bundle(bundle, config.experiment, per_lead=True))

    metrics = pd.concat(frames, ignore_index=True)
    metrics = metrics.sort_values(["lead"], kind="stable").reset_index(drop=True)
    tables = {"metrics.csv": metrics, **comparison_tables(metrics, models, inputs.strata, group="lead")}
    notes = ["linear forecasting uses the direct per-lead strategy; neural models share one target set"]
    return _result(config, inputs, tables, bundles, notes=notes)


def run_daily_smoothed(config: ExperimentConfig) -> ExperimentResult:
    """Tournament on daily data against the trailing-mean smoothed target."""
    inputs = load_inputs(config)
    resolutions = sorted({s.axis.resolution for s in inputs.series})
    if resolutions != [DAILY]:
        raise ResolutionMismatchError(f"daily_smoothed needs daily series, got {resolutions}")
    models = config.model_list()
    task = TaskSpec.daily(
        seq_len=config.resolved_seq_len(),
        smoothing_window=config.smoothing_window,
        daily_stride=config.daily_stride,
        climatology=config.climatology,
    )
    bundle = fit_models(models, task, inputs, config)
    metrics = evaluate_bundle(bundle, config.experiment)
    tables = {"metrics.csv": metrics, **comparison_tables(metrics, models, inputs.strata)}
    return _result(config, inputs, tables, {"": bundle})


def _stratum_basins(strata: Dict[str, str]) -> Dict[str, List[str]]:
    out = {"all": sorted(strata)}
    negative = sorted(b for b, s in strata.items() if s == NEGATIVE)
    if negative:
        out[NEGATIVE] = negative
    else:
        logger.warning("no basin carries a significant negative trend; ablation reports all basins only")
    return out


def ablation_table(metrics: pd.DataFrame, strata: Dict[str, str]) -> pd.DataFrame:
    """Mean metric per (stratum, model) for the two TFT-lite twins."""
    rows = []
    for stratum, basins in _stratum_basins(strata).items():
        picked = metrics[metrics["basin_id"].isin(basins) & metrics["defined"].astype(bool)]
        for model in (TFT_LITE, TFT_LITE_NO_TIME):
            for metric in ABLATION_METRICS:
                values = picked[(picked["model"] == model) & (picked["metric"] == metric)]["value"]
                rows.append(
                    {
                        "stratum": stratum,
                        "model": model,
                        "metric": metric,
                        "mean": float(values.mean()) if len(values) else float("nan"),
                        "n_basins": int(len(values)),
                    }
                )
    return pd.DataFrame(rows, columns=["stratum", "model", "metric", "mean", "n_basins"])


def timeseries_tables(bundle: _Bundle) -> Dict[str, pd.DataFrame]:
    """Per-basin test-period truth and predictions of every model, in mm."""
    merged: Optional[pd.DataFrame] = None
    for name, fit in bundle.fits.items():
        sset = bundle.sset(name)
        split = sset["test"]
        frame = pd.DataFrame(
            {
                "basin_id": split.basin_ids.astype(str),
                "date": pd.to_datetime(split.target_dates[:, 0]).strftime("%Y-%m-%d"),
                "truth": split.targets_raw[:, 0],
                name: predict_physical(fit, sset)[:, 0],
            }
        )
        if merged is None:
            merged = frame
        else:
            merged = merged.merge(frame.drop(columns="truth"), on=["basin_id", "date"], how="inner")
    tables = {}
    for basin_id, frame in merged.groupby("basin_id", sort=True):
        tables[f"timeseries/{basin_id}.csv"] = frame.drop(columns="basin_id").reset_index(drop=True)
    return tables


def run_time_index_ablation(config: ExperimentConfig) -> ExperimentResult:
    """Twin TFT-lite models with and without the time-index embedding."""
    inputs = load_inputs(config)
    models = config.model_list()
    if TFT_LITE_NO_TIME not in models:
        models.append(TFT_LITE_NO_TIME)
    task = TaskSpec.regression(seq_len=config.resolved_seq_len(), climatology=config.climatology)
    bundle = fit_models(models, task, inputs, config)

    metrics = evaluate_bundle(bundle, config.experiment)
    tables = {"metrics.csv": metrics, **comparison_tables(metrics, models, inputs.strata)}

    twin_rows = []
    for stratum, basins in _stratum_basins(inputs.strata).items():
        result = _compare(metrics, TFT_LITE, TFT_LITE_NO_TIME, "rmse", "two-sided", basins=basins)
        if result is not None:
            twin_rows.append(significance_rows(TFT_LITE, TFT_LITE_NO_TIME, "rmse", result, stratum=stratum))
    significance = tables.get("significance.csv", pd.DataFrame())
    if not significance.empty:
        significance = significance.assign(stratum="all")
    tables["significance.csv"] = pd.concat([significance, pd.DataFrame(twin_rows)], ignore_index=True)

    tables["ablation_table.csv"] = ablation_table(metrics, inputs.strata)
    tables.update(timeseries_tables(bundle))
    return _result(config, inputs, tables, {"": bundle})


def run_tree_baselines(config: ExperimentConfig) -> ExperimentResult:
    """Per-basin grid-searched RF and boosted trees on the Linear_single task."""
    inputs = load_inputs(config)
    models = config.model_list()
    task = TaskSpec.regression(seq_len=config.resolved_seq_len(), climatology=config.climatology)
    bundle = fit_models(models, task, inputs, config)
    metrics = evaluate_bundle(bundle, config.experiment)
    tables = {"metrics.csv": metrics, **comparison_tables(metrics, models, inputs.strata)}

    params = []
    for name in models:
        if name in TREE_FAMILIES:
            for basin_id, best in bundle.fits[name].best_params().items():
                params.append({"model": name, "basin_id": basin_id, **{k: str(v) for k, v in best.items()}})
    if params:
        tables["best_params.csv"] = pd.DataFrame(params)
    return _result(config, inputs, tables, {"": bundle})


PIPELINES: Dict[str, Callable[[ExperimentConfig], ExperimentResult]] = {
    "regression_tournament": run_regression_tournament,
    "seq_len_sweep": run_seq_len_sweep,
    "forecast_sweep": run_forecast_sweep,
    "daily_smoothed": run_daily_smoothed,
    "time_index_ablation": run_time_index_ablation,
    "tree_baselines": run_tree_baselines,
}


def output_dir(config: ExperimentConfig) -> Path:
    if config.out is not None:
        return Path(config.out)
    return Path(settings.out) / f"{config.experiment}_{config.variant}_seed{config.seed}"


def run_experiment(config: ExperimentConfig, write: bool = True) -> Tuple[ExperimentResult, Optional[Path]]:
    """
    Run the pipeline named by config.experiment.

    Args:
        config: Validated experiment config
        write: Emit the report directory (all files or none)

    Returns:
        (result, report directory or None)
    """
    if config.experiment not in PIPELINES:
        raise ConfigError(f"unknown experiment kind {config.experiment!r}")
    logger.info(f"Running {config.experiment} (profile {config.profile}, seed {config.seed})")
    result = PIPELINES[config.experiment](config)
    if not write:
        return result, None
    return result, ReportWriter(output_dir(config)).write(result)

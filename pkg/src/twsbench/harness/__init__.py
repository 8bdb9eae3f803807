"""
Experiment harness: declarative configs, the six study pipelines and
all-or-nothing report emission.
"""

from .config import (
    ExperimentConfig,
    NeuralOverrides,
    load_experiment_config,
    read_config_file,
    resolve_train_config,
)
from .pipelines import (
    PIPELINES,
    ablation_table,
    check_windows,
    comparison_tables,
    fit_models,
    load_inputs,
    output_dir,
    run_daily_smoothed,
    run_experiment,
    run_forecast_sweep,
    run_regression_tournament,
    run_seq_len_sweep,
    run_time_index_ablation,
    run_tree_baselines,
)
from .report import ExperimentResult, ReportWriter, load_report_table

__all__ = [
    "ExperimentConfig",
    "NeuralOverrides",
    "load_experiment_config",
    "read_config_file",
    "resolve_train_config",
    "ExperimentResult",
    "ReportWriter",
    "load_report_table",
    "PIPELINES",
    "run_experiment",
    "run_regression_tournament",
    "run_seq_len_sweep",
    "run_forecast_sweep",
    "run_daily_smoothed",
    "run_time_index_ablation",
    "run_tree_baselines",
    "fit_models",
    "load_inputs",
    "check_windows",
    "comparison_tables",
    "ablation_table",
    "output_dir",
]

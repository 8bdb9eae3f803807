"""
twsbench command line: synth, validate, run, inspect.

Exit codes: 0 success, 1 validation or config failure, 2 runtime failure.
"""

import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import pandas as pd
import typer
from loguru import logger
from pydantic import ValidationError

from twsbench.config.settings import settings
from twsbench.core.errors import ConfigError, DatasetError, MissingReportError
from twsbench.dataset.loader import validate_basin_files
from twsbench.dataset.storage import get_output_paths, save_generation_manifest, write_basin_series
from twsbench.dataset.synthetic import generate_synthetic
from twsbench.dataset.types import SyntheticConfig
from twsbench.harness.config import ExperimentConfig, read_config_file
from twsbench.harness.pipelines import run_experiment
from twsbench.harness.report import load_report_table
from twsbench.utils.constants import DAILY_LENGTH

app = typer.Typer(add_completion=False, help="Benchmark TWS prediction models on basin time series.")

MAX_VIOLATIONS_SHOWN = 20
QUERIES = {
    "metrics": "metrics.csv",
    "rankings": "rankings.csv",
    "best-counts": "best_counts.csv",
}


def _configure_logging(level: str) -> None:
    logger.remove()
    logger.add(sys.stderr, level=level.upper())


def exit_code(error: Exception) -> int:
    if isinstance(error, (DatasetError, ConfigError, MissingReportError, ValidationError)):
        return 1
    return 2


def _guarded(action: Callable[[], Any]) -> Any:
    try:
        return action()
    except typer.Exit:
        raise
    except Exception as e:
        typer.echo(f"[!] Error: {e}")
        logger.debug(f"{type(e).__name__} raised in command")
        raise typer.Exit(code=exit_code(e))


@app.callback()
def main_options(
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Log at DEBUG level"),
):
    _configure_logging("DEBUG" if verbose else settings.log_level)


@app.command()
def synth(
    config: Optional[Path] = typer.Option(None, "--config", help="SyntheticConfig as JSON or YAML"),
    variant: str = typer.Option("ol-like", "--variant", help="ol-like or da-like preset"),
    n_basins: Optional[int] = typer.Option(None, "--n-basins"),
    resolution: Optional[str] = typer.Option(None, "--resolution", help="monthly or daily"),
    seed: Optional[int] = typer.Option(None, "--seed"),
    out: Optional[Path] = typer.Option(None, "--out", help="Dataset directory"),
):
    """Generate a synthetic dataset (dynamic.csv, static.csv, synth_manifest.json)."""

    def action():
        data: Dict[str, Any] = read_config_file(config) if config else {}
        flags = {"n_basins": n_basins, "resolution": resolution, "seed": seed}
        data.update({k: v for k, v in flags.items() if v is not None})
        if data.get("resolution") == "daily" and "length" not in data:
            data["length"] = DAILY_LENGTH
        if variant == "da-like":
            synthetic = SyntheticConfig.da_like(**data)
        elif variant == "ol-like":
            synthetic = SyntheticConfig.ol_like(**data)
        else:
            raise ConfigError(f"synth supports ol-like or da-like, got {variant!r}")

        base_dir = out or Path(settings.out) / f"synth_{variant}_seed{synthetic.seed}"
        typer.echo(f"[*] Generating {synthetic.n_basins} {synthetic.resolution} basins ({variant})")
        series = generate_synthetic(synthetic)
        dynamic_path, static_path = get_output_paths(base_dir)
        write_basin_series(series, dynamic_path, static_path)
        save_generation_manifest(synthetic.model_dump(mode="json"), series, base_dir)
        typer.echo(f"[+] Saved to: {base_dir}")

    _guarded(action)


@app.command()
def validate(
    paths: List[Path] = typer.Argument(..., help="Dataset directory, or dynamic.csv and static.csv"),
):
    """Check a dataset; lists the first violations and exits nonzero when any exist."""

    def action():
        if len(paths) == 1:
            dynamic_path, static_path = get_output_paths(paths[0])
        elif len(paths) == 2:
            dynamic_path, static_path = paths
        else:
            raise ConfigError("validate takes a dataset directory or two CSV paths")

        violations = validate_basin_files(dynamic_path, static_path)
        if not violations:
            typer.echo(f"[+] {dynamic_path.parent}: no violations")
            return
        typer.echo(f"[!] {len(violations)} violation(s)")
        for violation in violations[:MAX_VIOLATIONS_SHOWN]:
            typer.echo(f"   [-] {violation}")
        if len(violations) > MAX_VIOLATIONS_SHOWN:
            typer.echo(f"   ... {len(violations) - MAX_VIOLATIONS_SHOWN} more")
        raise typer.Exit(code=1)

    _guarded(action)


@app.command()
def run(
    config: Optional[Path] = typer.Option(None, "--config", help="ExperimentConfig as JSON or YAML"),
    experiment: Optional[str] = typer.Option(None, "--experiment"),
    variant: Optional[str] = typer.Option(None, "--variant", help="ol-like, da-like or real"),
    dataset: Optional[Path] = typer.Option(None, "--dataset", help="Directory with dynamic.csv and static.csv"),
    models: Optional[str] = typer.Option(None, "--models", help="Comma-separated model names"),
    seq_len: Optional[int] = typer.Option(None, "--seq-len"),
    horizon: Optional[int] = typer.Option(None, "--horizon"),
    profile: Optional[str] = typer.Option(None, "--profile", help="desk or paper"),
    seed: Optional[int] = typer.Option(None, "--seed"),
    workers: Optional[int] = typer.Option(None, "--workers"),
    out: Optional[Path] = typer.Option(None, "--out"),
    save_models: bool = typer.Option(False, "--save-models", help="Also write fitted models under models/"),
):
    """Run one experiment and write its report directory."""

    def action():
        data: Dict[str, Any] = {"seed": settings.seed, "profile": settings.profile, "workers": settings.workers}
        if config:
            data.update(read_config_file(config))
        flags = {
            "experiment": experiment,
            "variant": variant,
            "dataset": str(dataset) if dataset else None,
            "models": [m.strip() for m in models.split(",") if m.strip()] if models else None,
            "seq_len": seq_len,
            "horizon": horizon,
            "profile": profile,
            "seed": seed,
            "workers": workers,
            "out": str(out) if out else None,
            "save_models": True if save_models else None,
        }
        data.update({k: v for k, v in flags.items() if v is not None})
        resolved = ExperimentConfig(**data)

        typer.echo(f"[*] Running {resolved.experiment} ({resolved.variant}, profile {resolved.profile})")
        result, report_dir = run_experiment(resolved)
        for row in result.summary().itertuples(index=False):
            typer.echo(f"   [+] {row.model}: median NSE {row.nse:.3f}, median KGE {row.kge:.3f}")
        typer.echo(f"[+] Report: {report_dir}")

    _guarded(action)


@app.command()
def inspect(
    report_dir: Path = typer.Argument(..., help="Report directory written by run"),
    query: str = typer.Option("metrics", "--query", help="metrics, rankings or best-counts"),
    basin: Optional[str] = typer.Option(None, "--basin"),
    model: Optional[str] = typer.Option(None, "--model"),
    metric: Optional[str] = typer.Option(None, "--metric"),
    as_csv: bool = typer.Option(False, "--csv", help="Print CSV instead of an aligned table"),
):
    """Filter a report table and print it."""

    def action():
        if query not in QUERIES:
            raise ConfigError(f"unknown query {query!r}; expected one of {sorted(QUERIES)}")
        frame = load_report_table(report_dir, QUERIES[query])
        frame = _filter(frame, "basin_id", basin)
        frame = _filter(frame, "metric", metric)
        if model is not None:
            model_columns = [c for c in ("model", "best", "second") if c in frame.columns]
            if model_columns:
                frame = frame[frame[model_columns].eq(model).any(axis=1)]
        if as_csv:
            typer.echo(frame.to_csv(index=False, lineterminator="\n"), nl=False)
        elif frame.empty:
            typer.echo("[!] No rows match")
        else:
            typer.echo(frame.to_string(index=False))

    _guarded(action)


def _filter(frame: pd.DataFrame, column: str, value: Optional[str]) -> pd.DataFrame:
    if value is None or column not in frame.columns:
        return frame
    return frame[frame[column].astype(str) == value]


def main():
    app()


if __name__ == "__main__":
    main()

import json

import pandas as pd
import pytest
from typer.testing import CliRunner

from twsbench.cli import app
from twsbench.dataset.storage import get_output_paths

runner = CliRunner()


@pytest.fixture
def report_dir(tmp_path):
    out = tmp_path / "report"
    result = runner.invoke(
        app,
        ["run", "--models", "Linear_single,Linear_glob", "--seed", "2", "--out", str(out), "--config", str(_tiny(tmp_path))],
    )
    assert result.exit_code == 0, result.output
    return out


def _tiny(tmp_path):
    path = tmp_path / "tiny.json"
    path.write_text(json.dumps({"n_basins": 3}))
    return path


def test_synth_then_validate(tmp_path):
    out = tmp_path / "synth"
    result = runner.invoke(app, ["synth", "--variant", "da-like", "--n-basins", "2", "--seed", "4", "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert (out / "dynamic.csv").exists() and (out / "static.csv").exists()

    result = runner.invoke(app, ["validate", str(out)])
    assert result.exit_code == 0
    assert "no violations" in result.output


def test_daily_synth_spans_the_record(tmp_path):
    out = tmp_path / "daily"
    result = runner.invoke(app, ["synth", "--resolution", "daily", "--n-basins", "1", "--out", str(out)])
    assert result.exit_code == 0, result.output
    with open(out / "synth_manifest.json") as f:
        manifest = json.load(f)
    assert (manifest["resolution"], manifest["steps_per_basin"]) == ("daily", 6575)


def test_synth_rejects_unknown_variant(tmp_path):
    result = runner.invoke(app, ["synth", "--variant", "real", "--out", str(tmp_path / "x")])
    assert result.exit_code == 1
    assert "[!] Error" in result.output


def test_validate_lists_violations(dataset_dir):
    dynamic_path, static_path = get_output_paths(dataset_dir)
    frame = pd.read_csv(dynamic_path, dtype={"basin_id": str})
    frame.drop(index=10).to_csv(dynamic_path, index=False)

    result = runner.invoke(app, ["validate", str(dynamic_path), str(static_path)])
    assert result.exit_code == 1
    assert "violation(s)" in result.output
    assert "[gap basin=B0001" in result.output


def test_run_prints_summary(report_dir):
    assert (report_dir / "metrics.csv").exists()
    assert (report_dir / "manifest.json").exists()


def test_run_rejects_unknown_model(tmp_path):
    result = runner.invoke(app, ["run", "--models", "Linear_single,XGB", "--out", str(tmp_path / "r")])
    assert result.exit_code == 1
    assert "unknown model" in result.output
    assert not (tmp_path / "r").exists()


def test_run_with_dataset(tmp_path, dataset_dir):
    out = tmp_path / "from_dataset"
    result = runner.invoke(
        app, ["run", "--dataset", str(dataset_dir), "--models", "Linear_glob", "--out", str(out), "--save-models"]
    )
    assert result.exit_code == 0, result.output
    assert "Linear_glob: median NSE" in result.output
    assert (out / "models" / "Linear_glob" / "lead1.json").exists()


def test_inspect_best_counts(report_dir):
    result = runner.invoke(app, ["inspect", str(report_dir), "--query", "best-counts", "--csv"])
    assert result.exit_code == 0
    assert result.output.splitlines()[0] == "stratum,metric,model,best,second,n_basins"


def test_inspect_filters(report_dir):
    result = runner.invoke(
        app, ["inspect", str(report_dir), "--basin", "B0002", "--metric", "nse", "--model", "Linear_glob", "--csv"]
    )
    assert result.exit_code == 0
    lines = result.output.splitlines()
    assert len(lines) == 2
    assert lines[1].startswith("B0002,Linear_glob,")

    result = runner.invoke(app, ["inspect", str(report_dir), "--basin", "B9999"])
    assert "No rows match" in result.output


def test_inspect_missing_report(tmp_path):
    result = runner.invoke(app, ["inspect", str(tmp_path / "nothing")])
    assert result.exit_code == 1

    result = runner.invoke(app, ["inspect", str(tmp_path), "--query", "weather"])
    assert result.exit_code == 1

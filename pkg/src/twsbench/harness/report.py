"""
Experiment results and all-or-nothing report emission.
"""

import json
import os
import shutil
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Union

import numpy as np
import pandas as pd
from loguru import logger

from twsbench.core.errors import MissingReportError
from twsbench.core.manifest import RunManifest
from twsbench.features.storage import save_feature_manifest
from twsbench.harness.models import save_fits
from twsbench.utils.constants import FLOAT_FORMAT

MANIFEST_FILE = "manifest.json"
TIMING_FILE = "timing.json"


@dataclass
class ExperimentResult:
    """
    Everything one pipeline produced. `tables` maps report-relative CSV paths
    (e.g. "metrics.csv", "timeseries/B0001.csv") to frames.
    """

    experiment: str
    tables: Dict[str, pd.DataFrame]
    manifest: RunManifest
    timing: Dict[str, Any] = field(default_factory=dict)
    extras: Dict[str, Any] = field(default_factory=dict)

    def table(self, name: str) -> pd.DataFrame:
        if name not in self.tables:
            raise MissingReportError(f"{self.experiment} produced no {name}")
        return self.tables[name]

    def summary(self) -> pd.DataFrame:
        """Median NSE and KGE per model over basins (and leads / lengths)."""
        metrics = self.table("metrics.csv")
        picked = metrics[metrics["metric"].isin(["nse", "kge"]) & metrics["defined"].astype(bool)]
        summary = picked.groupby(["model", "metric"])["value"].median().unstack("metric")
        return summary.reindex(columns=["nse", "kge"]).reset_index()


def _write_csv(frame: pd.DataFrame, path: Path) -> None:
    os.makedirs(path.parent, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def _json_default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    return str(value)


class ReportWriter:
    """
    Writes a result into a fresh temporary sibling directory and swaps it
    into place only after every file has been written.
    """

    def __init__(self, out_dir: Union[str, Path]):
        self.out_dir = Path(out_dir)

    def write(self, result: ExperimentResult) -> Path:
        parent = self.out_dir.parent
        os.makedirs(parent, exist_ok=True)
        staging = Path(tempfile.mkdtemp(prefix=f".{self.out_dir.name}-", dir=parent))
        try:
            for name, frame in sorted(result.tables.items()):
                _write_csv(frame, staging / name)
            self._write_artifacts(result, staging)
            with open(staging / MANIFEST_FILE, "w", encoding="utf-8") as f:
                json.dump(result.manifest.to_dict(), f, indent=2, sort_keys=True, default=_json_default)
            with open(staging / TIMING_FILE, "w", encoding="utf-8") as f:
                json.dump(result.timing, f, indent=2, sort_keys=True, default=_json_default)
            self._swap(staging)
        except Exception as e:
            logger.error(f"Report for {result.experiment} not written: {e}")
            shutil.rmtree(staging, ignore_errors=True)
            raise

        logger.success(f"Saved {len(result.tables)} report tables to: {self.out_dir}")
        return self.out_dir

    def _write_artifacts(self, result: ExperimentResult, staging: Path) -> None:
        """Feature manifests of every supervised set; fitted models on request."""
        for key, bundle in sorted(result.extras.get("bundles", {}).items()):
            for label, sset in sorted(bundle.sets.items()):
                save_feature_manifest(sset, staging, label)
            if result.extras.get("save_models"):
                save_fits(bundle.fits, staging / "models", suffix=key)

    def _swap(self, staging: Path) -> None:
        if self.out_dir.exists():
            retired = Path(tempfile.mkdtemp(prefix=f".{self.out_dir.name}-old-", dir=self.out_dir.parent))
            os.replace(self.out_dir, retired / self.out_dir.name)
            os.replace(staging, self.out_dir)
            shutil.rmtree(retired, ignore_errors=True)
        else:
            os.replace(staging, self.out_dir)


def load_report_table(report_dir: Union[str, Path], name: str) -> pd.DataFrame:
    """Read one CSV of a written report; the directory must hold a manifest."""
    report_dir = Path(report_dir)
    if not (report_dir / MANIFEST_FILE).exists():
        raise MissingReportError(f"no report at {report_dir} (manifest.json missing)")
    path = report_dir / name
    if not path.exists():
        raise MissingReportError(f"report {report_dir} has no {name}")
    return pd.read_csv(path)

"""Data ingestion, Monte Carlo experiments, density diagnostics, reports and the command line."""
from __future__ import annotations

from .experiment import ExperimentSpec, run_experiment
from .io import export_csv, ingest_csv, read_price_csv
from .kde import bandwidth, kde

__all__ = ["ExperimentSpec", "run_experiment", "ingest_csv", "export_csv", "read_price_csv", "kde", "bandwidth"]

"""Experiment sweeps, result schemas and the command-line entry point."""

from .runner import ExperimentRunner, SweepPoint, run_experiment
from .schema import COLUMN_DESCRIPTIONS, MEAN_SEED, RESULT_COLUMNS, ResultRow, RunManifest

__all__ = [
    "COLUMN_DESCRIPTIONS",
    "ExperimentRunner",
    "MEAN_SEED",
    "RESULT_COLUMNS",
    "ResultRow",
    "RunManifest",
    "SweepPoint",
    "run_experiment",
]

"""
Result table and manifest schemas emitted by the experiment runner.
"""

from __future__ import annotations

from datetime import datetime
from typing import Any

from pydantic import BaseModel, Field

RESULT_COLUMNS: tuple[str, ...] = (
    "experiment",
    "parameter",
    "value",
    "seed",
    "series",
    "metric",
    "result",
    "annotation",
)

COLUMN_DESCRIPTIONS: dict[str, str] = {
    "experiment": "Experiment kind that produced the row",
    "parameter": "Name of the swept parameter",
    "value": "Sweep point (units follow the parameter name)",
    "seed": "Channel/initialization seed, 'mean' for seed averages, empty if deterministic",
    "series": "Curve the row belongs to (architecture or baseline)",
    "metric": "Quantity reported in 'result'",
    "result": "Numeric value of the metric",
    "annotation": "Free-form notes such as se_source or degenerate carriers",
}

MEAN_SEED = "mean"


class ResultRow(BaseModel):
    """One long-form result record."""

    experiment: str
    parameter: str
    value: float
    seed: str = Field("", description="Seed as text; empty for deterministic sweeps")
    series: str
    metric: str
    result: float
    annotation: str = ""


class RunManifest(BaseModel):
    """Sidecar describing how a result table was produced."""

    experiment: str
    profile: str | None = None
    library_version: str
    seeds: list[int]
    threads: int
    rows: int
    columns: dict[str, str] = Field(default_factory=lambda: dict(COLUMN_DESCRIPTIONS))
    results_file: str
    created_at: datetime
    config: dict[str, Any]

"""Public package interface for the DS-FTTD hybrid beamforming simulator."""

from __future__ import annotations

from importlib import import_module
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import tomllib

from .channel import ChannelSet, OptimalPrecoderSet, generate_channel, optimal_precoders
from .config import ConfigManager, ExperimentConfig, ExperimentKind
from .fttd import FttdBank, SwitchMatrix, build_delay_bank, fttd_stack
from .models import (
    ArchitectureKind,
    ArchitectureSpec,
    DevicePowers,
    Direction,
    FrequencyGrid,
    UpaGeometry,
)
from .solvers.rd import RdConfig, RdResult, RdSolver, rd_solve


def _detect_version() -> str:
    try:
        return version("fttd-sim")
    except PackageNotFoundError:  # pragma: no cover - fallback for local source usage
        pyproject = Path(__file__).resolve().parent.parent / "pyproject.toml"
        if pyproject.exists():
            with pyproject.open("rb") as handle:
                data = tomllib.load(handle)
            return data.get("project", {}).get("version", "0.0.0")
        return "0.0.0"


__version__ = _detect_version()

geometry = import_module("fttd_sim.geometry")
squint = import_module("fttd_sim.squint")
channel = import_module("fttd_sim.channel")
metrics = import_module("fttd_sim.metrics")
baselines = import_module("fttd_sim.baselines")
exceptions = import_module("fttd_sim.exceptions")


__all__ = [
    "__version__",
    "ArchitectureKind",
    "ArchitectureSpec",
    "ChannelSet",
    "ConfigManager",
    "DevicePowers",
    "Direction",
    "ExperimentConfig",
    "ExperimentKind",
    "FrequencyGrid",
    "FttdBank",
    "OptimalPrecoderSet",
    "RdConfig",
    "RdResult",
    "RdSolver",
    "SwitchMatrix",
    "UpaGeometry",
    "baselines",
    "build_delay_bank",
    "channel",
    "exceptions",
    "fttd_stack",
    "generate_channel",
    "geometry",
    "metrics",
    "optimal_precoders",
    "rd_solve",
    "squint",
]

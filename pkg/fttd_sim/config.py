"""
Experiment configuration for fttd_sim.

Sources are layered from lowest to highest priority: a bundled profile, a
user file (TOML or JSON), environment variables and explicit overrides.
"""

from __future__ import annotations

import json
import math
import os
import tomllib
from collections.abc import Mapping
from enum import StrEnum
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from fttd_sim.exceptions import ConfigurationError
from fttd_sim.models import (
    DevicePowers,
    Direction,
    FrequencyGrid,
    SectorAntenna,
    UpaGeometry,
)
from fttd_sim.solvers.rd import RdConfig

PROFILE_DIR = Path(__file__).resolve().parent / "profiles"

ENV_VAR_MAP = {
    "threads": "FTTD_SIM_THREADS",
    "output": "FTTD_SIM_OUTPUT",
}


class ExperimentKind(StrEnum):
    GAIN_VS_FREQUENCY = "gain-vs-frequency"
    GAIN_VS_Q = "gain-vs-Q"
    SE_VS_Q = "se-vs-Q"
    EE_VS_Q = "ee-vs-Q"
    SE_VS_POWER = "se-vs-power"
    EE_VS_POWER = "ee-vs-power"
    SE_VS_ANTENNAS = "se-vs-antennas"
    EE_VS_ANTENNAS = "ee-vs-antennas"
    SE_VS_BANDWIDTH = "se-vs-bandwidth"
    SE_VS_CSI = "se-vs-csi"
    CONVERGENCE_TRACE = "convergence-trace"

    @property
    def stochastic(self) -> bool:
        return self is not ExperimentKind.GAIN_VS_FREQUENCY


class ArraySection(BaseModel):
    """Transmit and receive array shapes; spacing defaults to one center wavelength."""

    transmit_rows: int = Field(32, ge=1)
    transmit_cols: int = Field(32, ge=1)
    receive_rows: int = Field(32, ge=1)
    receive_cols: int = Field(32, ge=1)
    spacing: float | None = Field(None, gt=0)

    model_config = ConfigDict(frozen=True, extra="forbid")

    def _geometry(self, rows: int, cols: int, center: float) -> UpaGeometry:
        if self.spacing is None:
            return UpaGeometry.with_wavelength_spacing(rows, cols, center)
        return UpaGeometry(rows=rows, cols=cols, spacing=self.spacing, center_frequency=center)

    def transmit(self, center: float) -> UpaGeometry:
        return self._geometry(self.transmit_rows, self.transmit_cols, center)

    def receive(self, center: float) -> UpaGeometry:
        return self._geometry(self.receive_rows, self.receive_cols, center)


class GridSection(BaseModel):
    center_frequency: float = Field(300e9, gt=0)
    bandwidth: float = Field(50e9, gt=0)
    carrier_count: int = Field(50, ge=2)

    model_config = ConfigDict(frozen=True, extra="forbid")

    def build(self, bandwidth: float | None = None) -> FrequencyGrid:
        return FrequencyGrid(
            center=self.center_frequency,
            bandwidth=self.bandwidth if bandwidth is None else bandwidth,
            carrier_count=self.carrier_count,
        )


class ChannelSection(BaseModel):
    """Stochastic multipath model and receiver noise."""

    path_count: int = Field(4, ge=1, le=5)
    distance: float = Field(50.0, gt=0)
    max_path_delay: float = Field(20e-9, ge=0)
    nlos_attenuation_db: tuple[float, float] = (10.0, 20.0)
    noise_figure_db: float = 10.0
    azimuth_beamwidth_deg: float = Field(120.0, gt=0, le=720)
    elevation_beamwidth_deg: float = Field(45.0, gt=0, le=720)
    csi_seed_offset: int = Field(1000, ge=0)

    model_config = ConfigDict(frozen=True, extra="forbid")

    @model_validator(mode="after")
    def _check_attenuation(self) -> ChannelSection:
        low, high = self.nlos_attenuation_db
        if low > high:
            raise ValueError("nlos_attenuation_db must be given as (low, high)")
        return self

    def antenna(self) -> SectorAntenna:
        return SectorAntenna(
            azimuth_beamwidth=math.radians(self.azimuth_beamwidth_deg),
            elevation_beamwidth=math.radians(self.elevation_beamwidth_deg),
        )


class ArchitectureSection(BaseModel):
    chains: int = Field(4, ge=1)
    streams: int = Field(4, ge=1)
    delays_per_chain: int = Field(32, ge=2)
    transmit_power_dbm: float = 20.0
    ttd_count: int = Field(128, ge=1)
    gosa_group: int = Field(4, ge=1)

    model_config = ConfigDict(frozen=True, extra="forbid")

    @model_validator(mode="after")
    def _check_streams(self) -> ArchitectureSection:
        if self.streams > self.chains:
            raise ValueError("streams cannot exceed chains")
        return self


class SweepSection(BaseModel):
    """Sweep axes and beam targets (angles in degrees)."""

    delay_counts: list[int] = Field(default_factory=lambda: [4, 8, 16, 32, 64, 128])
    transmit_powers_dbm: list[float] = Field(
        default_factory=lambda: [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0]
    )
    antenna_counts: list[int] = Field(default_factory=lambda: [64, 128, 256, 512, 1024])
    bandwidths_ghz: list[float] = Field(default_factory=lambda: [10.0, 20.0, 30.0, 40.0, 50.0])
    csi_accuracies: list[float] = Field(default_factory=lambda: [0.6, 0.7, 0.8, 0.9, 1.0])
    target_azimuth_deg: float = Field(45.0, ge=-180, le=180)
    target_elevation_deg: float = Field(30.0, ge=0, le=180)
    squint_azimuth_deg: float = Field(20.0, ge=-180, le=180)
    squint_elevation_deg: float = Field(30.0, ge=0, le=180)
    frequency_points: int = Field(501, ge=2)

    model_config = ConfigDict(frozen=True, extra="forbid")

    @model_validator(mode="after")
    def _check_axes(self) -> SweepSection:
        if any(value < 2 for value in self.delay_counts):
            raise ValueError("delay_counts entries must be at least 2")
        if any(value < 1 for value in self.antenna_counts):
            raise ValueError("antenna_counts entries must be positive")
        if any(value <= 0 for value in self.bandwidths_ghz):
            raise ValueError("bandwidths_ghz entries must be positive")
        if any(not 0.0 <= value <= 1.0 for value in self.csi_accuracies):
            raise ValueError("csi_accuracies entries must lie in [0, 1]")
        return self

    @property
    def target(self) -> Direction:
        return Direction.from_degrees(self.target_azimuth_deg, self.target_elevation_deg)

    @property
    def squint_target(self) -> Direction:
        return Direction.from_degrees(self.squint_azimuth_deg, self.squint_elevation_deg)


class ExperimentConfig(BaseModel):
    """Fully resolved configuration of one experiment run."""

    experiment: ExperimentKind | None = None
    profile: str | None = None
    seeds: list[int] = Field(default_factory=lambda: [0], min_length=1)
    threads: int = Field(1, ge=1)
    output: Path | None = None
    strict: bool = False
    array: ArraySection = Field(default_factory=ArraySection)
    grid: GridSection = Field(default_factory=GridSection)
    channel: ChannelSection = Field(default_factory=ChannelSection)
    architecture: ArchitectureSection = Field(default_factory=ArchitectureSection)
    rd: RdConfig = Field(default_factory=RdConfig)
    devices: DevicePowers = Field(default_factory=DevicePowers)
    sweep: SweepSection = Field(default_factory=SweepSection)

    model_config = ConfigDict(extra="forbid")

    @model_validator(mode="after")
    def _check_streams_fit(self) -> ExperimentConfig:
        antennas = min(
            self.array.transmit_rows * self.array.transmit_cols,
            self.array.receive_rows * self.array.receive_cols,
        )
        if self.architecture.streams > antennas:
            raise ValueError("streams cannot exceed the smaller antenna count")
        return self


def _merge(base: dict[str, Any], update: Mapping[str, Any]) -> dict[str, Any]:
    merged = dict(base)
    for key, value in update.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = _merge(dict(merged[key]), value)
        else:
            merged[key] = value
    return merged


def format_validation_error(exc: ValidationError) -> str:
    details = []
    for error in exc.errors():
        field = ".".join(str(loc) for loc in error["loc"])
        details.append(f"{field}: {error['msg']}" if field else error["msg"])
    return "; ".join(details)


class ConfigManager:
    """Resolve experiment configuration from profiles, files and the environment."""

    def __init__(
        self,
        *,
        env: Mapping[str, str] | None = None,
        profile_dir: Path | str | None = None,
    ) -> None:
        self._env = os.environ if env is None else env
        self._profile_dir = Path(profile_dir) if profile_dir else PROFILE_DIR

    def profiles(self) -> list[str]:
        return sorted(path.stem for path in self._profile_dir.glob("*.toml"))

    def load(
        self,
        profile: str = "paper",
        *,
        config_path: Path | str | None = None,
        overrides: Mapping[str, Any] | None = None,
    ) -> ExperimentConfig:
        """
        Resolve a configuration.

        Raises:
            ConfigurationError: for unknown profiles, unreadable files or
                values that fail validation (field paths are listed).
        """

        data = self._read_profile(profile)
        data["profile"] = profile
        if config_path is not None:
            data = _merge(data, self._read_file(Path(config_path)))
        data = _merge(data, self._load_from_env())
        if overrides:
            data = _merge(data, {k: v for k, v in overrides.items() if v is not None})

        try:
            return ExperimentConfig.model_validate(data)
        except ValidationError as exc:
            raise ConfigurationError(
                f"Invalid configuration: {format_validation_error(exc)}"
            ) from exc

    def save(self, config: ExperimentConfig, path: Path | str) -> Path:
        """Persist a resolved configuration as JSON so the run can be replayed."""

        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(config.model_dump_json(indent=2) + "\n", encoding="utf-8")
        return target

    def _read_profile(self, name: str) -> dict[str, Any]:
        path = self._profile_dir / f"{name}.toml"
        if not path.is_file():
            known = ", ".join(self.profiles()) or "none"
            raise ConfigurationError(f"Unknown profile '{name}' (available: {known}).")
        return self._read_file(path)

    def _read_file(self, path: Path) -> dict[str, Any]:
        if not path.is_file():
            raise ConfigurationError(f"Configuration file '{path}' does not exist.")
        try:
            if path.suffix.lower() == ".json":
                data = json.loads(path.read_text(encoding="utf-8"))
            else:
                with path.open("rb") as handle:
                    data = tomllib.load(handle)
        except (OSError, tomllib.TOMLDecodeError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"Cannot read configuration '{path}': {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigurationError(f"Configuration '{path}' must be a table.")
        if "results_file" in data and isinstance(data.get("config"), dict):
            # run manifest: replay the embedded configuration
            return data["config"]
        return data

    def _load_from_env(self) -> dict[str, Any]:
        return {
            field: self._env[env_name]
            for field, env_name in ENV_VAR_MAP.items()
            if self._env.get(env_name)
        }

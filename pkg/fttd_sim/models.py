"""
Pydantic models for array geometry, channels, beam squint and power budgets.
"""

from __future__ import annotations

import math
from enum import StrEnum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from fttd_sim.utils.conversion import linear_to_db
from fttd_sim.utils.conversion import wavelength as wavelength_at

_ANGLE_SLACK = 1e-12


class Direction(BaseModel):
    """Azimuth/elevation pair in radians."""

    azimuth: float
    elevation: float

    model_config = ConfigDict(frozen=True)

    @field_validator("azimuth")
    @classmethod
    def _check_azimuth(cls, value: float) -> float:
        if not -math.pi - _ANGLE_SLACK <= value <= math.pi + _ANGLE_SLACK:
            raise ValueError("azimuth must lie in [-pi, pi]")
        return value

    @field_validator("elevation")
    @classmethod
    def _check_elevation(cls, value: float) -> float:
        if not -_ANGLE_SLACK <= value <= math.pi + _ANGLE_SLACK:
            raise ValueError("elevation must lie in [0, pi]")
        return value

    @classmethod
    def from_degrees(cls, azimuth: float, elevation: float) -> Direction:
        return cls(azimuth=math.radians(azimuth), elevation=math.radians(elevation))

    def to_degrees(self) -> tuple[float, float]:
        return math.degrees(self.azimuth), math.degrees(self.elevation)


BORESIGHT = Direction(azimuth=0.0, elevation=math.pi / 2)


class UpaGeometry(BaseModel):
    """Uniform planar array of ``rows x cols`` antennas (rows along y, cols along z)."""

    rows: int = Field(..., ge=1)
    cols: int = Field(..., ge=1)
    spacing: float = Field(..., gt=0, description="Antenna spacing in meters")
    center_frequency: float = Field(..., gt=0, description="Hz")

    model_config = ConfigDict(frozen=True)

    @property
    def antenna_count(self) -> int:
        return self.rows * self.cols

    @property
    def wavelength(self) -> float:
        return wavelength_at(self.center_frequency)

    @classmethod
    def with_wavelength_spacing(
        cls, rows: int, cols: int, center_frequency: float
    ) -> UpaGeometry:
        """Array with the default spacing of one center wavelength."""

        return cls(
            rows=rows,
            cols=cols,
            spacing=wavelength_at(center_frequency),
            center_frequency=center_frequency,
        )


class FrequencyGrid(BaseModel):
    """``carrier_count`` equally spaced subcarriers spanning ``bandwidth`` around ``center``."""

    center: float = Field(..., gt=0, description="Hz")
    bandwidth: float = Field(..., gt=0, description="Hz")
    carrier_count: int = Field(..., ge=2)

    model_config = ConfigDict(frozen=True)

    @property
    def spacing(self) -> float:
        return self.bandwidth / (self.carrier_count - 1)

    @property
    def carriers(self) -> np.ndarray:
        index = np.arange(1, self.carrier_count + 1, dtype=float)
        return self.center + self.spacing * (index - (self.carrier_count + 1) / 2)

    @property
    def center_index(self) -> int:
        """Index of the carrier closest to the center (lower one on ties)."""

        return int(np.argmin(np.abs(self.carriers - self.center)))


class SectorAntenna(BaseModel):
    """Ideal sector element: constant gain inside the beamwidths, zero outside."""

    azimuth_beamwidth: float = Field(..., gt=0, le=4 * math.pi)
    elevation_beamwidth: float = Field(..., gt=0, le=4 * math.pi)

    model_config = ConfigDict(frozen=True)

    @property
    def gain(self) -> float:
        solid_angle = min(self.azimuth_beamwidth * self.elevation_beamwidth, 4 * math.pi)
        return 4 * math.pi / solid_angle

    @property
    def gain_dbi(self) -> float:
        return float(linear_to_db(self.gain))

    def contains(self, direction: Direction) -> bool:
        half_az = self.azimuth_beamwidth / 2
        half_el = self.elevation_beamwidth / 2
        az_offset = abs(direction.azimuth - BORESIGHT.azimuth)
        el_offset = abs(direction.elevation - BORESIGHT.elevation)
        return az_offset <= half_az and el_offset <= half_el

    @classmethod
    def from_degrees(cls, azimuth: float, elevation: float) -> SectorAntenna:
        return cls(
            azimuth_beamwidth=math.radians(azimuth),
            elevation_beamwidth=math.radians(elevation),
        )


class PathSpec(BaseModel):
    """One propagation path; the complex gain is referenced to the center frequency."""

    amplitude: float = Field(..., gt=0)
    phase: float = 0.0
    departure: Direction
    arrival: Direction
    delay: float = Field(0.0, ge=0, description="Propagation delay in seconds")

    model_config = ConfigDict(frozen=True)

    @property
    def gain(self) -> complex:
        return complex(self.amplitude * np.exp(1j * self.phase))

    def carrier_gains(self, frequencies: np.ndarray, center: float) -> np.ndarray:
        """Per-carrier complex gains ``gain * exp(-j 2 pi (f - f_c) delay)``."""

        offsets = np.asarray(frequencies, dtype=float) - center
        return self.gain * np.exp(-2j * np.pi * offsets * self.delay)


class CsiPerturbation(BaseModel):
    """Imperfect channel knowledge: accuracy in [0, 1] and the error seed."""

    accuracy: float = Field(..., ge=0.0, le=1.0)
    seed: int = 0

    model_config = ConfigDict(frozen=True)


class SquintReport(BaseModel):
    """Beam-squint summary for one carrier under center-frequency weights."""

    frequency: float
    squinted_direction: Direction | None
    array_gain: float = Field(..., ge=0)
    gain_loss_db: float


class DevicePowers(BaseModel):
    """Per-device power draw in milliwatts around 300 GHz."""

    power_amplifier: float = Field(60.0, ge=0)
    rf_chain: float = Field(26.0, ge=0)
    dac: float = Field(110.0, ge=0)
    baseband: float = Field(200.0, ge=0)
    phase_shifter: float = Field(42.0, ge=0)
    ttd: float = Field(80.0, ge=0)
    fttd: float = Field(30.0, ge=0)
    switch: float = Field(10.0, ge=0)
    power_divider: float = Field(6.6, ge=0)
    power_combiner: float = Field(6.6, ge=0)

    model_config = ConfigDict(frozen=True)


class ArchitectureKind(StrEnum):
    DS_FTTD = "DS-FTTD"
    FC_TTD = "FC-TTD"
    TTD_AIDED = "TTD-aided"
    FC_PS = "FC-PS"
    DS_PS = "DS-PS"
    AOSA_PS = "AoSA-PS"
    GOSA = "GoSA"


class ArchitectureSpec(BaseModel):
    """Transmitter architecture description used by the power model."""

    kind: ArchitectureKind
    antennas: int = Field(..., ge=1)
    chains: int = Field(..., ge=1)
    transmit_power: float = Field(..., ge=0, description="Watts")
    delays_per_chain: int | None = Field(None, ge=1)
    ttd_count: int | None = Field(128, ge=1)
    gosa_group: int | None = Field(4, ge=1)
    active_fttd: int | None = Field(None, ge=0)

    model_config = ConfigDict(frozen=True)

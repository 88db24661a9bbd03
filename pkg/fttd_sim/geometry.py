"""
Uniform planar array geometry, subcarrier grids and steering vectors.

Antennas are ordered row-major over ``(a, b)`` with ``a`` along y (``rows``)
and ``b`` along z (``cols``), i.e. index ``a * cols + b``. This matches the
Kronecker product of the azimuth factor with the elevation factor.
"""

from __future__ import annotations

import math
from collections.abc import Sequence

import numpy as np

from fttd_sim.exceptions import InvalidArgumentError
from fttd_sim.models import (
    BORESIGHT,
    Direction,
    FrequencyGrid,
    SectorAntenna,
    UpaGeometry,
)
from fttd_sim.utils.conversion import SPEED_OF_LIGHT, wavelength

__all__ = [
    "BORESIGHT",
    "effective_area",
    "fractional_bandwidth",
    "frequency_grid",
    "sector_gain",
    "square_array",
    "steering_matrix",
    "steering_vector",
]


def frequency_grid(center: float, bandwidth: float, carrier_count: int) -> FrequencyGrid:
    if carrier_count < 2:
        raise InvalidArgumentError(
            f"A frequency grid needs at least 2 carriers, got {carrier_count}."
        )
    if bandwidth <= 0:
        raise InvalidArgumentError(f"Bandwidth must be positive, got {bandwidth}.")
    if center <= 0:
        raise InvalidArgumentError(f"Center frequency must be positive, got {center}.")
    return FrequencyGrid(center=center, bandwidth=bandwidth, carrier_count=carrier_count)


def _axis_phases(
    geom: UpaGeometry, frequencies: np.ndarray, direction: Direction
) -> tuple[np.ndarray, np.ndarray]:
    wavenumber = 2 * np.pi * frequencies[:, None] / SPEED_OF_LIGHT * geom.spacing
    horizontal = math.sin(direction.azimuth) * math.sin(direction.elevation)
    vertical = math.cos(direction.elevation)
    rows = np.arange(geom.rows)
    cols = np.arange(geom.cols)
    azimuth_factor = np.exp(1j * wavenumber * rows[None, :] * horizontal)
    elevation_factor = np.exp(1j * wavenumber * cols[None, :] * vertical)
    return azimuth_factor, elevation_factor


def steering_matrix(
    geom: UpaGeometry, frequencies: Sequence[float] | np.ndarray, direction: Direction
) -> np.ndarray:
    """Steering vectors for every frequency, stacked as rows of an ``(M, N)`` array."""

    freqs = np.atleast_1d(np.asarray(frequencies, dtype=float))
    if np.any(freqs <= 0):
        raise InvalidArgumentError("Frequencies must be positive.")
    azimuth_factor, elevation_factor = _axis_phases(geom, freqs, direction)
    stacked = azimuth_factor[:, :, None] * elevation_factor[:, None, :]
    return stacked.reshape(freqs.size, geom.antenna_count)


def steering_vector(geom: UpaGeometry, frequency: float, direction: Direction) -> np.ndarray:
    """Array response of ``geom`` at ``frequency`` towards ``direction``."""

    return steering_matrix(geom, [frequency], direction)[0]


def sector_gain(antenna: SectorAntenna, direction: Direction) -> float:
    """Amplitude gain ``sqrt(G_0)`` inside the sector (boundary included), else 0."""

    if antenna.contains(direction):
        return math.sqrt(antenna.gain)
    return 0.0


def effective_area(antenna: SectorAntenna, center_frequency: float) -> float:
    if center_frequency <= 0:
        raise InvalidArgumentError("Center frequency must be positive.")
    return wavelength(center_frequency) ** 2 * antenna.gain / (4 * math.pi)


def square_array(
    antennas: int, center_frequency: float, spacing: float | None = None
) -> UpaGeometry:
    """
    Near-square array with ``antennas`` elements.

    ``rows`` is the largest power of two not exceeding ``sqrt(antennas)``, so
    64 -> 8x8, 128 -> 8x16, 512 -> 16x32.
    """

    if antennas < 1:
        raise InvalidArgumentError("Antenna count must be positive.")
    rows = 1 << (math.isqrt(antennas).bit_length() - 1)
    if antennas % rows:
        raise InvalidArgumentError(
            f"{antennas} antennas cannot be arranged as a {rows}-row array."
        )
    if spacing is None:
        return UpaGeometry.with_wavelength_spacing(rows, antennas // rows, center_frequency)
    return UpaGeometry(
        rows=rows,
        cols=antennas // rows,
        spacing=spacing,
        center_frequency=center_frequency,
    )


def fractional_bandwidth(grid: FrequencyGrid) -> float:
    return grid.bandwidth / grid.center

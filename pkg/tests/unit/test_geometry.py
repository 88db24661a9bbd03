from __future__ import annotations

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from fttd_sim.exceptions import InvalidArgumentError
from fttd_sim.geometry import (
    effective_area,
    fractional_bandwidth,
    frequency_grid,
    sector_gain,
    square_array,
    steering_matrix,
    steering_vector,
)
from fttd_sim.models import BORESIGHT, Direction, SectorAntenna, UpaGeometry
from fttd_sim.utils.conversion import SPEED_OF_LIGHT

CENTER = 300e9


def _loop_steering(geom: UpaGeometry, frequency: float, direction: Direction) -> np.ndarray:
    vector = np.empty(geom.antenna_count, dtype=complex)
    for a in range(geom.rows):
        for b in range(geom.cols):
            phase = (
                2
                * math.pi
                * frequency
                / SPEED_OF_LIGHT
                * geom.spacing
                * (
                    a * math.sin(direction.azimuth) * math.sin(direction.elevation)
                    + b * math.cos(direction.elevation)
                )
            )
            vector[a * geom.cols + b] = complex(math.cos(phase), math.sin(phase))
    return vector


def test_steering_vector_matches_scalar_loop() -> None:
    geom = UpaGeometry.with_wavelength_spacing(3, 5, CENTER)
    direction = Direction.from_degrees(37.0, 71.0)

    for frequency in (280e9, 300e9, 318e9):
        assert_allclose(
            steering_vector(geom, frequency, direction),
            _loop_steering(geom, frequency, direction),
            atol=1e-10,
        )


def test_steering_matrix_rows_are_steering_vectors() -> None:
    geom = UpaGeometry.with_wavelength_spacing(4, 4, CENTER)
    direction = Direction.from_degrees(-20.0, 100.0)
    freqs = np.array([290e9, 300e9, 310e9])

    matrix = steering_matrix(geom, freqs, direction)

    assert matrix.shape == (3, 16)
    for m, frequency in enumerate(freqs):
        assert_allclose(matrix[m], steering_vector(geom, frequency, direction))
    assert_allclose(np.abs(matrix), 1.0)


def test_steering_vector_at_boresight_is_flat() -> None:
    geom = UpaGeometry.with_wavelength_spacing(2, 3, CENTER)

    assert_allclose(steering_vector(geom, CENTER, BORESIGHT), np.ones(6), atol=1e-12)


def test_steering_matrix_rejects_non_positive_frequency() -> None:
    geom = UpaGeometry.with_wavelength_spacing(2, 2, CENTER)

    with pytest.raises(InvalidArgumentError):
        steering_matrix(geom, [0.0], BORESIGHT)


def test_frequency_grid_spans_the_band() -> None:
    grid = frequency_grid(CENTER, 50e9, 50)
    carriers = grid.carriers

    assert carriers.size == 50
    assert carriers[0] == pytest.approx(275e9)
    assert carriers[-1] == pytest.approx(325e9)
    assert_allclose(np.diff(carriers), 50e9 / 49)
    assert fractional_bandwidth(grid) == pytest.approx(1 / 6)


@pytest.mark.parametrize(
    ("center", "bandwidth", "count"),
    [(CENTER, 50e9, 1), (CENTER, 0.0, 10), (-1.0, 50e9, 10)],
)
def test_frequency_grid_rejects_invalid(center: float, bandwidth: float, count: int) -> None:
    with pytest.raises(InvalidArgumentError):
        frequency_grid(center, bandwidth, count)


def test_center_index_of_odd_grid() -> None:
    grid = frequency_grid(CENTER, 50e9, 5)

    assert grid.center_index == 2
    assert grid.carriers[2] == pytest.approx(CENTER)


@pytest.mark.parametrize(
    ("antennas", "shape"),
    [(64, (8, 8)), (128, (8, 16)), (256, (16, 16)), (512, (16, 32)), (1024, (32, 32))],
)
def test_square_array_shapes(antennas: int, shape: tuple[int, int]) -> None:
    geom = square_array(antennas, CENTER)

    assert (geom.rows, geom.cols) == shape
    assert geom.spacing == pytest.approx(SPEED_OF_LIGHT / CENTER)


def test_square_array_rejects_unfactorable_count() -> None:
    with pytest.raises(InvalidArgumentError):
        square_array(5, CENTER)


def test_sector_gain_inside_outside_and_on_boundary() -> None:
    antenna = SectorAntenna.from_degrees(120.0, 45.0)
    expected = math.sqrt(4 * math.pi / (math.radians(120.0) * math.radians(45.0)))

    assert sector_gain(antenna, BORESIGHT) == pytest.approx(expected)
    assert sector_gain(antenna, Direction.from_degrees(60.0, 90.0)) == pytest.approx(expected)
    assert sector_gain(antenna, Direction.from_degrees(61.0, 90.0)) == 0.0
    assert sector_gain(antenna, Direction.from_degrees(0.0, 120.0)) == 0.0


def test_sector_gain_is_at_least_isotropic() -> None:
    antenna = SectorAntenna(azimuth_beamwidth=2 * math.pi, elevation_beamwidth=2 * math.pi)

    assert antenna.gain == pytest.approx(1.0)
    assert antenna.gain_dbi == pytest.approx(0.0)


def test_effective_area() -> None:
    antenna = SectorAntenna.from_degrees(120.0, 45.0)
    wave = SPEED_OF_LIGHT / CENTER

    assert effective_area(antenna, CENTER) == pytest.approx(wave**2 * antenna.gain / (4 * math.pi))


def test_direction_validation() -> None:
    with pytest.raises(ValueError, match="elevation"):
        Direction(azimuth=0.0, elevation=-0.5)
    with pytest.raises(ValueError, match="azimuth"):
        Direction(azimuth=4.0, elevation=1.0)

    azimuth, elevation = Direction.from_degrees(20.0, 30.0).to_degrees()
    assert azimuth == pytest.approx(20.0)
    assert elevation == pytest.approx(30.0)

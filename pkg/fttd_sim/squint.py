"""
Closed-form beam-squint analysis for frequency-flat (phase shifter) weights.
"""

from __future__ import annotations

import math
from collections.abc import Iterable
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike

from fttd_sim.exceptions import DomainError, InvalidArgumentError, ShapeMismatchError
from fttd_sim.geometry import steering_vector
from fttd_sim.models import Direction, SquintReport, UpaGeometry
from fttd_sim.utils.conversion import SPEED_OF_LIGHT, linear_to_db

_DIRICHLET_FLOOR = 1e-12
_DOMAIN_SLACK = 1e-12


def narrowband_weights(geom: UpaGeometry, target: Direction) -> np.ndarray:
    """Phase-shifter weights designed for the center frequency."""

    return steering_vector(geom, geom.center_frequency, target)


def ideal_ttd_weights(geom: UpaGeometry, target: Direction, frequency: float) -> np.ndarray:
    """True-time-delay weights: the matched response at every carrier."""

    return steering_vector(geom, frequency, target)


def _checked_unit(value: float, label: str) -> float:
    if abs(value) > 1 + _DOMAIN_SLACK:
        raise DomainError(
            f"{label} argument {value:.6f} leaves [-1, 1].", value=value
        )
    return min(1.0, max(-1.0, value))


def squinted_direction(target: Direction, center: float, frequency: float) -> Direction:
    """
    Direction actually served at ``frequency`` by weights steered to ``target``
    at ``center``.

    Raises:
        DomainError: when the squinted beam has no physical direction.
    """

    ratio = center / frequency
    cos_elevation = _checked_unit(ratio * math.cos(target.elevation), "arccos")
    elevation = math.acos(cos_elevation)
    horizontal = ratio * math.sin(target.azimuth) * math.sin(target.elevation)
    sin_elevation = math.sin(elevation)
    if sin_elevation < _DIRICHLET_FLOOR:
        if abs(horizontal) > _DOMAIN_SLACK:
            raise DomainError(
                "Squinted beam reaches the array axis with a non-zero azimuth term.",
                value=math.inf,
            )
        return Direction(azimuth=target.azimuth, elevation=elevation)

    azimuth = math.asin(_checked_unit(horizontal / sin_elevation, "arcsin"))
    # keep the target's half-space; sin() alone cannot tell front from back
    if abs(target.azimuth) > math.pi / 2:
        azimuth = math.copysign(math.pi, target.azimuth) - azimuth
    return Direction(azimuth=azimuth, elevation=elevation)


def _dirichlet(count: int, angle: np.ndarray) -> np.ndarray:
    sin_angle = np.sin(angle)
    singular = np.abs(sin_angle) < _DIRICHLET_FLOOR
    safe = np.where(singular, 1.0, sin_angle)
    return np.where(singular, float(count), np.sin(count * angle) / safe)


def array_gain_profile(
    geom: UpaGeometry, target: Direction, frequencies: ArrayLike
) -> np.ndarray:
    """Closed-form array gain of the narrowband weights at each frequency."""

    freqs = np.asarray(frequencies, dtype=float)
    offset = (freqs - geom.center_frequency) / SPEED_OF_LIGHT
    psi_azimuth = offset * math.sin(target.azimuth) * math.sin(target.elevation)
    psi_elevation = offset * math.cos(target.elevation)
    along_rows = _dirichlet(geom.rows, np.pi * geom.spacing * psi_azimuth)
    along_cols = _dirichlet(geom.cols, np.pi * geom.spacing * psi_elevation)
    return (along_rows * along_cols) ** 2 / geom.antenna_count


def array_gain(geom: UpaGeometry, target: Direction, frequency: float) -> float:
    """Array gain ``|w^H a|^2 / N`` of the narrowband weights at ``frequency``."""

    return float(array_gain_profile(geom, target, [frequency])[0])


def gain_loss_db(geom: UpaGeometry, gain: float) -> float:
    if gain <= 0.0:
        return math.inf
    return max(0.0, float(linear_to_db(geom.antenna_count) - linear_to_db(gain)))


def array_gain_loss(geom: UpaGeometry, target: Direction, frequency: float) -> float:
    """Loss in dB relative to the full array gain; ``inf`` when the gain vanishes."""

    return gain_loss_db(geom, array_gain(geom, target, frequency))


def beamforming_gain(weights: np.ndarray, response: np.ndarray) -> float:
    weights = np.asarray(weights)
    response = np.asarray(response)
    if weights.shape != response.shape:
        raise ShapeMismatchError(
            "Weights and response must have the same shape.",
            expected=response.shape,
            actual=weights.shape,
        )
    return float(abs(np.vdot(weights, response)) ** 2 / response.size)


def average_gain_db(
    gains: Iterable[float], *, domain: Literal["linear", "db"] = "db"
) -> float:
    """
    Mean gain over carriers in dB.

    ``domain="db"`` averages the per-carrier dB values, the figure quoted for
    squinted beams; ``domain="linear"`` averages the linear gains and converts
    once (never below the former).
    """

    values = np.fromiter(gains, dtype=float)
    if values.size == 0:
        raise InvalidArgumentError("At least one gain is required.")
    if domain == "db":
        return float(np.mean(linear_to_db(values)))
    return float(linear_to_db(values.mean()))


def squint_report(geom: UpaGeometry, target: Direction, frequency: float) -> SquintReport:
    try:
        direction: Direction | None = squinted_direction(
            target, geom.center_frequency, frequency
        )
    except DomainError:
        direction = None
    gain = array_gain(geom, target, frequency)
    return SquintReport(
        frequency=frequency,
        squinted_direction=direction,
        array_gain=gain,
        gain_loss_db=gain_loss_db(geom, gain),
    )

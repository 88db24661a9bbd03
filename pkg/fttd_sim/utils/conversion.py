"""
Unit conversions and physical constants shared across the simulator.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import ArrayLike
from scipy import constants

SPEED_OF_LIGHT: float = constants.c
THERMAL_NOISE_DENSITY_DBM_HZ = -174.0


def db_to_linear(value_db: ArrayLike) -> np.ndarray | float:
    """Convert a power ratio in dB to linear scale."""

    result = np.power(10.0, np.asarray(value_db, dtype=float) / 10.0)
    return float(result) if result.ndim == 0 else result


def linear_to_db(value: ArrayLike) -> np.ndarray | float:
    """Convert a linear power ratio to dB; zero maps to ``-inf``."""

    array = np.asarray(value, dtype=float)
    with np.errstate(divide="ignore"):
        result = 10.0 * np.log10(array)
    return float(result) if result.ndim == 0 else result


def dbm_to_watts(value_dbm: float) -> float:
    return 10.0 ** ((value_dbm - 30.0) / 10.0)


def wavelength(frequency: float) -> float:
    return SPEED_OF_LIGHT / frequency

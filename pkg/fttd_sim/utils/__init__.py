"""Utility helpers for fttd_sim."""

from .conversion import (
    SPEED_OF_LIGHT,
    db_to_linear,
    dbm_to_watts,
    linear_to_db,
    wavelength,
)
from .linalg import complete_orthonormal, hermitian_logdet, procrustes, water_fill

__all__ = [
    "SPEED_OF_LIGHT",
    "complete_orthonormal",
    "db_to_linear",
    "dbm_to_watts",
    "hermitian_logdet",
    "linear_to_db",
    "procrustes",
    "water_fill",
    "wavelength",
]

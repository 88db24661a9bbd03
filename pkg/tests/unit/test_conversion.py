from __future__ import annotations

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from fttd_sim.utils.conversion import (
    SPEED_OF_LIGHT,
    db_to_linear,
    dbm_to_watts,
    linear_to_db,
    wavelength,
)


def test_db_conversions_invert_each_other() -> None:
    assert linear_to_db(100.0) == pytest.approx(20.0)
    assert db_to_linear(-10.0) == pytest.approx(0.1)
    assert isinstance(linear_to_db(2.0), float)
    assert_allclose(db_to_linear(linear_to_db(np.array([0.5, 4.0]))), [0.5, 4.0])


def test_linear_to_db_maps_zero_to_minus_infinity() -> None:
    values = linear_to_db(np.array([0.0, 1.0]))

    assert math.isinf(values[0]) and values[0] < 0
    assert values[1] == 0.0


def test_power_and_wavelength() -> None:
    assert dbm_to_watts(30.0) == pytest.approx(1.0)
    assert dbm_to_watts(20.0) == pytest.approx(0.1)
    assert wavelength(300e9) == pytest.approx(SPEED_OF_LIGHT / 300e9)
    assert wavelength(300e9) == pytest.approx(1e-3, rel=1e-3)

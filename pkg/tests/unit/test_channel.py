from __future__ import annotations

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from fttd_sim.channel import (
    ChannelSet,
    ChannelSpec,
    build_channel,
    carrier_noise_power,
    free_space_amplitude,
    generate_channel,
    optimal_precoders,
    perturb_csi,
    thermal_noise_power,
)
from fttd_sim.exceptions import InvalidArgumentError, ShapeMismatchError
from fttd_sim.geometry import frequency_grid
from fttd_sim.metrics import precoder_spectral_efficiency
from fttd_sim.models import Direction, PathSpec, SectorAntenna, UpaGeometry
from fttd_sim.solvers.oracles import random_semi_unitary
from fttd_sim.utils.conversion import SPEED_OF_LIGHT

CENTER = 300e9


@pytest.fixture
def antenna() -> SectorAntenna:
    return SectorAntenna.from_degrees(120.0, 45.0)


@pytest.fixture
def small_channel(antenna: SectorAntenna) -> ChannelSet:
    transmit = UpaGeometry.with_wavelength_spacing(2, 4, CENTER)
    receive = UpaGeometry.with_wavelength_spacing(2, 3, CENTER)
    grid = frequency_grid(CENTER, 20e9, 4)
    return generate_channel(transmit, receive, grid, antenna, 3, seed=11)


def test_sector_gain_is_derived_not_serialized(antenna: SectorAntenna) -> None:
    payload = antenna.model_dump()

    assert set(payload) == {"azimuth_beamwidth", "elevation_beamwidth"}
    assert SectorAntenna.model_validate(payload).gain == pytest.approx(antenna.gain)
    assert antenna.gain_dbi == pytest.approx(10 * math.log10(antenna.gain))


def test_free_space_amplitude() -> None:
    expected = SPEED_OF_LIGHT / (4 * math.pi * CENTER * 50.0)

    assert free_space_amplitude(CENTER, 50.0) == pytest.approx(expected)
    with pytest.raises(InvalidArgumentError):
        free_space_amplitude(CENTER, 0.0)


def test_thermal_noise_reference() -> None:
    assert thermal_noise_power(1.0, 0.0) == pytest.approx(10 ** (-20.4))
    assert thermal_noise_power(1e9, 10.0) == pytest.approx(10 ** (-20.4 + 9 + 1))


def test_carrier_noise_uses_subcarrier_bandwidth() -> None:
    grid = frequency_grid(CENTER, 50e9, 50)

    assert carrier_noise_power(grid) == pytest.approx(thermal_noise_power(1e9))


def test_channel_matrix_has_path_rank(small_channel: ChannelSet) -> None:
    dense = small_channel.dense()

    assert dense.shape == (4, 6, 8)
    for matrix in dense:
        assert np.linalg.matrix_rank(matrix) <= 3


def test_factored_apply_matches_dense(small_channel: ChannelSet) -> None:
    precoder = np.random.default_rng(0).standard_normal((8, 2)) + 0j

    for m in range(small_channel.carrier_count):
        assert_allclose(
            small_channel.apply(m, precoder),
            small_channel.matrix(m) @ precoder,
            atol=1e-18,
        )

    with pytest.raises(ShapeMismatchError):
        small_channel.apply(0, np.ones((7, 1)))


def test_generate_channel_is_seeded(antenna: SectorAntenna) -> None:
    geom = UpaGeometry.with_wavelength_spacing(2, 2, CENTER)
    grid = frequency_grid(CENTER, 10e9, 3)

    first = generate_channel(geom, geom, grid, antenna, 4, seed=5)
    again = generate_channel(geom, geom, grid, antenna, 4, seed=5)
    other = generate_channel(geom, geom, grid, antenna, 4, seed=6)

    assert_allclose(first.dense(), again.dense())
    assert not np.allclose(first.dense(), other.dense())


def test_generate_channel_line_of_sight_is_strongest(antenna: SectorAntenna) -> None:
    geom = UpaGeometry.with_wavelength_spacing(2, 2, CENTER)
    grid = frequency_grid(CENTER, 10e9, 3)

    channel = generate_channel(geom, geom, grid, antenna, 5, seed=1, distance=50.0)

    amplitudes = [path.amplitude for path in channel.paths]
    assert amplitudes[0] == pytest.approx(free_space_amplitude(CENTER, 50.0))
    assert all(value < amplitudes[0] / 3 for value in amplitudes[1:])
    assert all(antenna.contains(path.departure) for path in channel.paths)


@pytest.mark.parametrize("n_paths", [0, 6])
def test_generate_channel_path_bounds(antenna: SectorAntenna, n_paths: int) -> None:
    geom = UpaGeometry.with_wavelength_spacing(2, 2, CENTER)
    grid = frequency_grid(CENTER, 10e9, 3)

    with pytest.raises(InvalidArgumentError, match="Path count"):
        generate_channel(geom, geom, grid, antenna, n_paths, seed=0)


def test_path_outside_sector_contributes_nothing(antenna: SectorAntenna) -> None:
    geom = UpaGeometry.with_wavelength_spacing(2, 2, CENTER)
    grid = frequency_grid(CENTER, 10e9, 3)
    outside = PathSpec(
        amplitude=1.0,
        departure=Direction.from_degrees(90.0, 90.0),
        arrival=Direction.from_degrees(0.0, 90.0),
    )

    channel = build_channel(geom, geom, grid, antenna, [outside])

    assert_allclose(channel.dense(), 0.0)


def test_path_gain_is_referenced_to_center(antenna: SectorAntenna) -> None:
    path = PathSpec(
        amplitude=2.0,
        phase=0.3,
        departure=Direction.from_degrees(0.0, 90.0),
        arrival=Direction.from_degrees(0.0, 90.0),
        delay=1e-9,
    )
    gains = path.carrier_gains(np.array([CENTER, CENTER + 1e9]), CENTER)

    assert gains[0] == pytest.approx(2.0 * np.exp(0.3j))
    assert gains[1] == pytest.approx(2.0 * np.exp(0.3j) * np.exp(-2j * np.pi))


def test_perturb_csi_matches_error_energy(small_channel: ChannelSet) -> None:
    estimate = perturb_csi(small_channel, 0.6, seed=42)

    assert not estimate.is_exact
    for m in range(small_channel.carrier_count):
        truth = small_channel.matrix(m)
        error = estimate.matrix(m) - 0.6 * truth
        assert np.linalg.norm(error) == pytest.approx(0.8 * np.linalg.norm(truth))

    again = perturb_csi(small_channel, 0.6, seed=42)
    assert_allclose(estimate.dense(), again.dense())
    assert_allclose(estimate.exact().dense(), small_channel.dense())


def test_perturb_csi_full_accuracy_is_exact(small_channel: ChannelSet) -> None:
    estimate = perturb_csi(small_channel, 1.0, seed=3)

    assert estimate.is_exact
    assert_allclose(estimate.dense(), small_channel.dense())


def test_perturb_csi_rejects_out_of_range(small_channel: ChannelSet) -> None:
    with pytest.raises(InvalidArgumentError):
        perturb_csi(small_channel, 1.2)


def test_channel_spec_json_replay(small_channel: ChannelSet) -> None:
    estimate = perturb_csi(small_channel, 0.8, seed=9)
    spec = estimate.to_spec()

    replayed = ChannelSpec.model_validate_json(spec.model_dump_json()).build()

    assert replayed.csi == estimate.csi
    assert_allclose(replayed.dense(), estimate.dense())


def test_optimal_precoders_structure(small_channel: ChannelSet) -> None:
    noise = 1e-12
    targets = optimal_precoders(small_channel, 2, 0.1, noise)

    assert targets.precoders.shape == (4, 8, 2)
    assert targets.total_power == pytest.approx(0.1)
    assert_allclose(targets.frequencies, small_channel.grid.carriers)
    for m in range(4):
        vectors = targets.right_vectors[m]
        assert_allclose(vectors.conj().T @ vectors, np.eye(2), atol=1e-10)
        gram = targets.precoders[m].conj().T @ targets.precoders[m]
        assert_allclose(gram, np.diag(targets.power_allocation[m]), atol=1e-12)


def test_factored_singular_values_match_dense(small_channel: ChannelSet) -> None:
    targets = optimal_precoders(small_channel, 3, 1.0, 1e-12)

    for m in range(small_channel.carrier_count):
        sigma = np.linalg.svd(small_channel.matrix(m), compute_uv=False)[:3]
        assert_allclose(targets.singular_values[m], sigma, rtol=1e-8, atol=1e-20)


def test_optimal_precoders_beat_random_precoders(small_channel: ChannelSet) -> None:
    noise = 1e-12
    targets = optimal_precoders(small_channel, 2, 0.1, noise)
    best = precoder_spectral_efficiency(small_channel, targets.precoders, noise)

    rng = np.random.default_rng(8)
    for _ in range(10):
        random = random_semi_unitary(8, 2, rng, carriers=4) * math.sqrt(0.1 / 8)
        assert precoder_spectral_efficiency(small_channel, random, noise) <= best + 1e-9


def test_optimal_precoders_on_estimate_use_dense_path(small_channel: ChannelSet) -> None:
    estimate = perturb_csi(small_channel, 0.7, seed=1)

    targets = optimal_precoders(estimate, 2, 0.1, 1e-12)

    for m in range(estimate.carrier_count):
        sigma = np.linalg.svd(estimate.matrix(m), compute_uv=False)[:2]
        assert_allclose(targets.singular_values[m], sigma, rtol=1e-8)


def test_optimal_precoders_validates_inputs(small_channel: ChannelSet) -> None:
    with pytest.raises(InvalidArgumentError, match="Stream count"):
        optimal_precoders(small_channel, 7, 0.1, 1e-12)
    with pytest.raises(InvalidArgumentError):
        optimal_precoders(small_channel, 2, 0.0, 1e-12)
    with pytest.raises(InvalidArgumentError):
        optimal_precoders(small_channel, 2, 0.1, 0.0)

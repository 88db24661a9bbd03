"""
Multicarrier multipath channels, optimal digital precoders and imperfect CSI.

A channel is kept in factored form: for every carrier ``m`` the matrix is
``H[m] = A_r[m] diag(g[m]) A_t[m]^H`` with one steering column per path. The
dense ``N_r x N_t`` matrices are derived on demand, one carrier at a time.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from fttd_sim.exceptions import InvalidArgumentError, ShapeMismatchError
from fttd_sim.geometry import sector_gain, steering_matrix
from fttd_sim.models import (
    CsiPerturbation,
    Direction,
    FrequencyGrid,
    PathSpec,
    SectorAntenna,
    UpaGeometry,
)
from fttd_sim.utils.conversion import (
    SPEED_OF_LIGHT,
    THERMAL_NOISE_DENSITY_DBM_HZ,
    db_to_linear,
    dbm_to_watts,
    linear_to_db,
)
from fttd_sim.utils.linalg import complete_orthonormal, water_fill

logger = logging.getLogger(__name__)

MAX_PATHS = 5
DEFAULT_DISTANCE = 50.0
DEFAULT_MAX_PATH_DELAY = 20e-9
DEFAULT_NLOS_ATTENUATION_DB = (10.0, 20.0)
DEFAULT_NOISE_FIGURE_DB = 10.0


def free_space_amplitude(center_frequency: float, distance: float) -> float:
    """Free-space amplitude ``c / (4 pi f_c D)`` of a line-of-sight path."""

    if center_frequency <= 0 or distance <= 0:
        raise InvalidArgumentError("Frequency and distance must be positive.")
    return SPEED_OF_LIGHT / (4 * math.pi * center_frequency * distance)


def thermal_noise_power(
    bandwidth: float, noise_figure_db: float = DEFAULT_NOISE_FIGURE_DB
) -> float:
    """Thermal noise in watts over ``bandwidth`` Hz (-174 dBm/Hz reference)."""

    if bandwidth <= 0:
        raise InvalidArgumentError("Bandwidth must be positive.")
    return dbm_to_watts(
        THERMAL_NOISE_DENSITY_DBM_HZ + float(linear_to_db(bandwidth)) + noise_figure_db
    )


def carrier_noise_power(
    grid: FrequencyGrid, noise_figure_db: float = DEFAULT_NOISE_FIGURE_DB
) -> float:
    """Per-carrier noise power over ``B / M``."""

    return thermal_noise_power(grid.bandwidth / grid.carrier_count, noise_figure_db)


class ChannelSpec(BaseModel):
    """Replayable JSON description of a channel; matrices are re-derived, not stored."""

    transmit: UpaGeometry
    receive: UpaGeometry
    grid: FrequencyGrid
    antenna: SectorAntenna
    paths: list[PathSpec] = Field(..., min_length=1, max_length=MAX_PATHS)
    seed: int = 0
    csi: CsiPerturbation | None = None

    model_config = ConfigDict(frozen=True)

    def build(self) -> ChannelSet:
        channel = build_channel(
            self.transmit,
            self.receive,
            self.grid,
            self.antenna,
            self.paths,
            seed=self.seed,
        )
        if self.csi is not None:
            channel = perturb_csi(channel, self.csi.accuracy, seed=self.csi.seed)
        return channel


@dataclass(frozen=True, slots=True)
class ChannelSet:
    """Per-carrier channel matrices of one multipath realization."""

    transmit: UpaGeometry
    receive: UpaGeometry
    grid: FrequencyGrid
    antenna: SectorAntenna
    paths: tuple[PathSpec, ...]
    seed: int
    transmit_steering: np.ndarray = field(repr=False)
    receive_steering: np.ndarray = field(repr=False)
    path_gains: np.ndarray = field(repr=False)
    csi: CsiPerturbation | None = None

    @property
    def carrier_count(self) -> int:
        return self.grid.carrier_count

    @property
    def n_transmit(self) -> int:
        return self.transmit.antenna_count

    @property
    def n_receive(self) -> int:
        return self.receive.antenna_count

    @property
    def is_exact(self) -> bool:
        return self.csi is None or self.csi.accuracy == 1.0

    def _exact_matrix(self, carrier: int) -> np.ndarray:
        scaled = self.receive_steering[carrier] * self.path_gains[carrier][None, :]
        return scaled @ self.transmit_steering[carrier].conj().T

    def _estimation_error(self, carrier: int) -> np.ndarray:
        rng = np.random.default_rng([self.csi.seed, carrier])
        shape = (self.n_receive, self.n_transmit)
        return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)

    def matrix(self, carrier: int) -> np.ndarray:
        """Dense ``N_r x N_t`` matrix of ``carrier`` (the estimate when CSI is imperfect)."""

        exact = self._exact_matrix(carrier)
        if self.is_exact:
            return exact
        accuracy = self.csi.accuracy
        error = self._estimation_error(carrier)
        error_norm = np.linalg.norm(error)
        scale = np.linalg.norm(exact) / error_norm if error_norm > 0 else 0.0
        return accuracy * exact + scale * math.sqrt(1 - accuracy**2) * error

    def matrices(self) -> Iterator[np.ndarray]:
        for carrier in range(self.carrier_count):
            yield self.matrix(carrier)

    def dense(self) -> np.ndarray:
        """All carriers stacked as ``(M, N_r, N_t)``; only sensible for small arrays."""

        return np.stack(list(self.matrices()))

    def apply(self, carrier: int, precoder: np.ndarray) -> np.ndarray:
        """``H[carrier] @ precoder`` without forming the dense matrix when CSI is exact."""

        if precoder.shape[0] != self.n_transmit:
            raise ShapeMismatchError(
                "Precoder rows must match the transmit antenna count.",
                expected=self.n_transmit,
                actual=precoder.shape[0],
            )
        if not self.is_exact:
            return self.matrix(carrier) @ precoder
        projected = self.transmit_steering[carrier].conj().T @ precoder
        projected *= self.path_gains[carrier][:, None]
        return self.receive_steering[carrier] @ projected

    def exact(self) -> ChannelSet:
        """The true channel behind an estimate."""

        if self.csi is None:
            return self
        return _replace_csi(self, None)

    def to_spec(self) -> ChannelSpec:
        return ChannelSpec(
            transmit=self.transmit,
            receive=self.receive,
            grid=self.grid,
            antenna=self.antenna,
            paths=list(self.paths),
            seed=self.seed,
            csi=self.csi,
        )


def _replace_csi(channel: ChannelSet, csi: CsiPerturbation | None) -> ChannelSet:
    return ChannelSet(
        transmit=channel.transmit,
        receive=channel.receive,
        grid=channel.grid,
        antenna=channel.antenna,
        paths=channel.paths,
        seed=channel.seed,
        transmit_steering=channel.transmit_steering,
        receive_steering=channel.receive_steering,
        path_gains=channel.path_gains,
        csi=csi,
    )


def build_channel(
    transmit: UpaGeometry,
    receive: UpaGeometry,
    grid: FrequencyGrid,
    antenna: SectorAntenna,
    paths: Sequence[PathSpec],
    *,
    seed: int = 0,
) -> ChannelSet:
    """Deterministically assemble the per-carrier factors from explicit paths."""

    if not 1 <= len(paths) <= MAX_PATHS:
        raise InvalidArgumentError(
            f"Path count must be between 1 and {MAX_PATHS}, got {len(paths)}."
        )
    carriers = grid.carriers
    transmit_steering = np.stack(
        [steering_matrix(transmit, carriers, path.departure) for path in paths], axis=-1
    )
    receive_steering = np.stack(
        [steering_matrix(receive, carriers, path.arrival) for path in paths], axis=-1
    )
    path_gains = np.stack(
        [
            path.carrier_gains(carriers, grid.center)
            * sector_gain(antenna, path.departure)
            * sector_gain(antenna, path.arrival)
            for path in paths
        ],
        axis=-1,
    )
    return ChannelSet(
        transmit=transmit,
        receive=receive,
        grid=grid,
        antenna=antenna,
        paths=tuple(paths),
        seed=seed,
        transmit_steering=transmit_steering,
        receive_steering=receive_steering,
        path_gains=path_gains,
    )


def _sector_direction(rng: np.random.Generator, antenna: SectorAntenna) -> Direction:
    half_az = min(antenna.azimuth_beamwidth / 2, math.pi)
    half_el = min(antenna.elevation_beamwidth / 2, math.pi / 2)
    return Direction(
        azimuth=float(rng.uniform(-half_az, half_az)),
        elevation=float(rng.uniform(math.pi / 2 - half_el, math.pi / 2 + half_el)),
    )


def generate_channel(
    transmit: UpaGeometry,
    receive: UpaGeometry,
    grid: FrequencyGrid,
    antenna: SectorAntenna,
    n_paths: int,
    seed: int,
    *,
    distance: float = DEFAULT_DISTANCE,
    max_path_delay: float = DEFAULT_MAX_PATH_DELAY,
    nlos_attenuation_db: tuple[float, float] = DEFAULT_NLOS_ATTENUATION_DB,
) -> ChannelSet:
    """
    Draw a stochastic multipath channel.

    The first path is line of sight with free-space amplitude at ``distance``;
    the others are 10-20 dB weaker by default. Phases are uniform, path delays
    uniform in ``[0, max_path_delay]`` and departure/arrival directions uniform
    inside the sector so every path sees the element gain.
    """

    if not 1 <= n_paths <= MAX_PATHS:
        raise InvalidArgumentError(
            f"Path count must be between 1 and {MAX_PATHS}, got {n_paths}."
        )
    rng = np.random.default_rng(seed)
    reference = free_space_amplitude(grid.center, distance)
    low, high = nlos_attenuation_db
    paths: list[PathSpec] = []
    for index in range(n_paths):
        attenuation = 0.0 if index == 0 else float(rng.uniform(low, high))
        paths.append(
            PathSpec(
                amplitude=reference * math.sqrt(float(db_to_linear(-attenuation))),
                phase=float(rng.uniform(0.0, 2 * math.pi)),
                departure=_sector_direction(rng, antenna),
                arrival=_sector_direction(rng, antenna),
                delay=float(rng.uniform(0.0, max_path_delay)),
            )
        )
    return build_channel(transmit, receive, grid, antenna, paths, seed=seed)


def perturb_csi(channel: ChannelSet, accuracy: float, seed: int = 0) -> ChannelSet:
    """
    Channel estimate ``accuracy * H + e * sqrt(1 - accuracy^2) * E``.

    ``E`` is i.i.d. standard complex Gaussian per carrier and ``e`` rescales it
    to the Frobenius norm of ``H``. The error is regenerated from
    ``(seed, carrier)`` when a carrier is requested.
    """

    if not 0.0 <= accuracy <= 1.0:
        raise InvalidArgumentError(f"CSI accuracy must lie in [0, 1], got {accuracy}.")
    return _replace_csi(channel.exact(), CsiPerturbation(accuracy=accuracy, seed=seed))


@dataclass(frozen=True, slots=True)
class OptimalPrecoderSet:
    """Unconstrained optimal precoders ``P[m] = V[m] diag(sqrt(p[m]))``."""

    precoders: np.ndarray = field(repr=False)
    right_vectors: np.ndarray = field(repr=False)
    singular_values: np.ndarray = field(repr=False)
    power_allocation: np.ndarray = field(repr=False)
    frequencies: np.ndarray = field(repr=False)

    @property
    def carrier_count(self) -> int:
        return self.precoders.shape[0]

    @property
    def n_transmit(self) -> int:
        return self.precoders.shape[1]

    @property
    def n_streams(self) -> int:
        return self.precoders.shape[2]

    @property
    def total_power(self) -> float:
        return float(self.power_allocation.sum())

    @property
    def center_index(self) -> int:
        center = 0.5 * (self.frequencies.min() + self.frequencies.max())
        return int(np.argmin(np.abs(self.frequencies - center)))

    @classmethod
    def from_vectors(
        cls,
        right_vectors: np.ndarray,
        power_allocation: np.ndarray,
        frequencies: Sequence[float] | np.ndarray,
        singular_values: np.ndarray | None = None,
    ) -> OptimalPrecoderSet:
        precoders = right_vectors * np.sqrt(power_allocation)[:, None, :]
        if singular_values is None:
            singular_values = np.zeros_like(power_allocation)
        return cls(
            precoders=precoders,
            right_vectors=right_vectors,
            singular_values=singular_values,
            power_allocation=power_allocation,
            frequencies=np.asarray(frequencies, dtype=float),
        )


def _factored_right_vectors(
    channel: ChannelSet, carrier: int, n_streams: int
) -> tuple[np.ndarray, np.ndarray]:
    # H = Qr (Rr G Rt^H) Qt^H, so the SVD of the small core gives H's right vectors
    q_t, r_t = np.linalg.qr(channel.transmit_steering[carrier])
    q_r, r_r = np.linalg.qr(channel.receive_steering[carrier])
    core = (r_r * channel.path_gains[carrier][None, :]) @ r_t.conj().T
    _, sigma, vh = np.linalg.svd(core)
    vectors = q_t @ vh.conj().T
    values = np.zeros(n_streams)
    kept = min(n_streams, sigma.size)
    values[:kept] = sigma[:kept]
    return complete_orthonormal(vectors, n_streams), values


def _dense_right_vectors(
    channel: ChannelSet, carrier: int, n_streams: int
) -> tuple[np.ndarray, np.ndarray]:
    _, sigma, vh = np.linalg.svd(channel.matrix(carrier), full_matrices=False)
    return vh[:n_streams].conj().T, sigma[:n_streams]


def optimal_precoders(
    channel: ChannelSet,
    n_streams: int,
    total_power: float,
    noise_power: float,
) -> OptimalPrecoderSet:
    """
    SVD precoders with one water-filling pass over all ``M * N_s`` subchannels.

    Streams beyond the channel rank keep an orthonormal direction but receive
    no power.
    """

    if not 1 <= n_streams <= min(channel.n_transmit, channel.n_receive):
        raise InvalidArgumentError(
            f"Stream count {n_streams} must lie in [1, min(N_t, N_r)]."
        )
    if total_power <= 0:
        raise InvalidArgumentError("Total transmit power must be positive.")
    if noise_power <= 0:
        raise InvalidArgumentError("Noise power must be positive.")

    decompose = _factored_right_vectors if channel.is_exact else _dense_right_vectors
    vectors = np.empty((channel.carrier_count, channel.n_transmit, n_streams), dtype=complex)
    sigma = np.zeros((channel.carrier_count, n_streams))
    for carrier in range(channel.carrier_count):
        vectors[carrier], sigma[carrier] = decompose(channel, carrier, n_streams)

    powers, level = water_fill(sigma**2 / noise_power, total_power)
    logger.debug(
        "channel.waterfill",
        extra={
            "event": "channel.waterfill",
            "active": int(np.count_nonzero(powers)),
            "level": level,
        },
    )
    return OptimalPrecoderSet.from_vectors(vectors, powers, channel.grid.carriers, sigma)

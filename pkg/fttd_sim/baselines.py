"""
Reference precoders for the comparison curves.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from fttd_sim.channel import OptimalPrecoderSet
from fttd_sim.exceptions import InvalidArgumentError
from fttd_sim.geometry import steering_matrix
from fttd_sim.models import Direction, FrequencyGrid, UpaGeometry


@dataclass(frozen=True, slots=True)
class PhaseShifterPrecoder:
    """Frequency-flat analog matrix with per-carrier digital precoders."""

    analog: np.ndarray = field(repr=False)
    digital: np.ndarray = field(repr=False)
    precoders: np.ndarray = field(repr=False)


def narrowband_phase_shifter(
    targets: OptimalPrecoderSet, chains: int | None = None
) -> PhaseShifterPrecoder:
    """
    Fully connected phase-shifter baseline designed at the center carrier.

    The analog matrix takes the phases of the center-carrier right singular
    vectors; each ``D[m]`` is the least-squares fit ``A^+ P[m]`` rescaled so
    ``||A D[m]||_F = ||P[m]||_F``.
    """

    chains = targets.n_streams if chains is None else chains
    if not 1 <= chains <= targets.n_streams:
        raise InvalidArgumentError(
            f"Chain count must lie in [1, {targets.n_streams}], got {chains}."
        )
    center = targets.right_vectors[targets.center_index][:, :chains]
    analog = np.exp(1j * np.angle(center))
    digital = np.einsum("ln,mns->mls", np.linalg.pinv(analog), targets.precoders)

    precoders = np.einsum("nl,mls->mns", analog, digital)
    target_norms = np.linalg.norm(targets.precoders, axis=(1, 2))
    hybrid_norms = np.linalg.norm(precoders, axis=(1, 2))
    scale = np.divide(
        target_norms,
        hybrid_norms,
        out=np.zeros_like(target_norms),
        where=hybrid_norms > 0,
    )
    digital = digital * scale[:, None, None]
    return PhaseShifterPrecoder(
        analog=analog,
        digital=digital,
        precoders=precoders * scale[:, None, None],
    )


def steering_targets(
    geom: UpaGeometry, grid: FrequencyGrid, direction: Direction
) -> OptimalPrecoderSet:
    """Single-stream targets equal to the steering vector of each carrier."""

    response = steering_matrix(geom, grid.carriers, direction)
    antennas = geom.antenna_count
    allocation = np.full((grid.carrier_count, 1), float(antennas))
    return OptimalPrecoderSet.from_vectors(
        response[:, :, None] / np.sqrt(antennas),
        allocation,
        grid.carriers,
        singular_values=np.ones_like(allocation),
    )

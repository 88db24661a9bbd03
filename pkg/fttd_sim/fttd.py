"""
Dynamic-subarray fixed true-time-delay (DS-FTTD) architecture model.

Every RF chain feeds ``Q`` fixed delay lines; a switch network connects each
antenna to exactly one delay line of one chain. Switch column ``c`` addresses
chain ``c // Q`` and delay ``c % Q``.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from fttd_sim.exceptions import InvalidArgumentError, ShapeMismatchError
from fttd_sim.models import UpaGeometry
from fttd_sim.utils.conversion import SPEED_OF_LIGHT


class FttdBank(BaseModel):
    """Delay lines shared by every chain: ``delays[q] = tau_max * q / (Q - 1)``."""

    chain_count: int = Field(..., ge=1)
    delays: tuple[float, ...]

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def _check_delays(self) -> FttdBank:
        if len(self.delays) < 2:
            raise ValueError("a delay bank needs at least two delays")
        if any(value < 0 for value in self.delays):
            raise ValueError("delays must be non-negative")
        return self

    @property
    def delays_per_chain(self) -> int:
        return len(self.delays)

    @property
    def columns(self) -> int:
        return self.chain_count * self.delays_per_chain

    @property
    def min_delay(self) -> float:
        return self.delays[0]

    @property
    def max_delay(self) -> float:
        return self.delays[-1]


def max_array_delay(geom: UpaGeometry) -> float:
    """Upper bound ``d (L + W - 2) / (sqrt(2) c)`` on the delay any direction needs."""

    return geom.spacing * (geom.rows + geom.cols - 2) / (math.sqrt(2) * SPEED_OF_LIGHT)


def build_delay_bank(
    geom: UpaGeometry,
    chain_count: int,
    delays_per_chain: int,
    *,
    max_delay: float | None = None,
) -> FttdBank:
    if delays_per_chain < 2:
        raise InvalidArgumentError(
            f"At least two delays per chain are required, got {delays_per_chain}."
        )
    if chain_count < 1:
        raise InvalidArgumentError("Chain count must be positive.")
    top = max_array_delay(geom) if max_delay is None else max_delay
    if top < 0:
        raise InvalidArgumentError("Maximum delay must be non-negative.")
    steps = np.arange(delays_per_chain) / (delays_per_chain - 1)
    return FttdBank(chain_count=chain_count, delays=tuple(float(v) for v in top * steps))


@dataclass(frozen=True, slots=True)
class FttdMatrix:
    """Block-diagonal ``(L_t Q) x L_t`` delay response of one carrier."""

    phases: np.ndarray
    chain_count: int

    @property
    def delays_per_chain(self) -> int:
        return self.phases.size

    def dense(self) -> np.ndarray:
        return np.kron(np.eye(self.chain_count), self.phases[:, None])


def fttd_matrix(bank: FttdBank, frequency: float) -> FttdMatrix:
    phases = np.exp(2j * np.pi * frequency * np.asarray(bank.delays))
    return FttdMatrix(phases=phases, chain_count=bank.chain_count)


@dataclass(frozen=True, slots=True)
class FttdStack:
    """Delay responses of every carrier, stored as an ``(M, Q)`` phase array."""

    phases: np.ndarray
    chain_count: int

    @property
    def carrier_count(self) -> int:
        return self.phases.shape[0]

    @property
    def delays_per_chain(self) -> int:
        return self.phases.shape[1]

    @property
    def columns(self) -> int:
        return self.chain_count * self.delays_per_chain

    def carrier(self, index: int) -> FttdMatrix:
        return FttdMatrix(phases=self.phases[index], chain_count=self.chain_count)

    def dense(self) -> np.ndarray:
        return np.stack([self.carrier(m).dense() for m in range(self.carrier_count)])


def fttd_stack(bank: FttdBank, frequencies: Sequence[float] | np.ndarray) -> FttdStack:
    freqs = np.asarray(frequencies, dtype=float)
    phases = np.exp(2j * np.pi * freqs[:, None] * np.asarray(bank.delays)[None, :])
    return FttdStack(phases=phases, chain_count=bank.chain_count)


@dataclass(frozen=True, slots=True, eq=False)
class SwitchMatrix:
    """
    Binary ``N_t x (L_t Q)`` matrix with exactly one 1 per row.

    Stored as the selected column of every antenna; the matrix itself is a view.
    """

    indices: np.ndarray
    chain_count: int
    delays_per_chain: int

    def __post_init__(self) -> None:
        indices = np.array(self.indices, dtype=np.int64, copy=True).ravel()
        if indices.size and (indices.min() < 0 or indices.max() >= self.columns):
            raise InvalidArgumentError(
                f"Switch positions must lie in [0, {self.columns})."
            )
        indices.setflags(write=False)
        object.__setattr__(self, "indices", indices)

    @property
    def columns(self) -> int:
        return self.chain_count * self.delays_per_chain

    @property
    def n_antennas(self) -> int:
        return self.indices.size

    @property
    def chains(self) -> np.ndarray:
        return self.indices // self.delays_per_chain

    @property
    def delay_slots(self) -> np.ndarray:
        return self.indices % self.delays_per_chain

    def chain_of(self, antenna: int) -> int:
        return int(self.indices[antenna]) // self.delays_per_chain

    def delay_of(self, antenna: int) -> int:
        return int(self.indices[antenna]) % self.delays_per_chain

    def dense(self) -> np.ndarray:
        matrix = np.zeros((self.n_antennas, self.columns), dtype=np.int8)
        matrix[np.arange(self.n_antennas), self.indices] = 1
        return matrix

    def to_list(self) -> list[int]:
        return [int(value) for value in self.indices]

    def with_row(self, antenna: int, column: int) -> SwitchMatrix:
        indices = self.indices.copy()
        indices[antenna] = column
        return SwitchMatrix(indices, self.chain_count, self.delays_per_chain)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SwitchMatrix):
            return NotImplemented
        return (
            self.chain_count == other.chain_count
            and self.delays_per_chain == other.delays_per_chain
            and np.array_equal(self.indices, other.indices)
        )

    def __hash__(self) -> int:
        return hash((self.chain_count, self.delays_per_chain, self.indices.tobytes()))

    @classmethod
    def random(
        cls,
        n_antennas: int,
        chain_count: int,
        delays_per_chain: int,
        rng: np.random.Generator,
    ) -> SwitchMatrix:
        """Each antenna picks one of the ``L_t Q`` positions uniformly at random."""

        columns = chain_count * delays_per_chain
        return cls(rng.integers(0, columns, size=n_antennas), chain_count, delays_per_chain)

    @classmethod
    def from_dense(
        cls, matrix: np.ndarray, chain_count: int, delays_per_chain: int
    ) -> SwitchMatrix:
        matrix = np.asarray(matrix)
        if matrix.ndim != 2 or matrix.shape[1] != chain_count * delays_per_chain:
            raise ShapeMismatchError(
                "Switch matrix width must equal chains x delays.",
                expected=chain_count * delays_per_chain,
                actual=matrix.shape,
            )
        if not np.isin(matrix, (0, 1)).all() or not (matrix.sum(axis=1) == 1).all():
            raise InvalidArgumentError("Every switch row must be one-hot.")
        return cls(matrix.argmax(axis=1), chain_count, delays_per_chain)


def _check_switch(switch: SwitchMatrix, chain_count: int, delays_per_chain: int) -> None:
    if switch.chain_count != chain_count or switch.delays_per_chain != delays_per_chain:
        raise ShapeMismatchError(
            "Switch layout does not match the delay bank.",
            expected=(chain_count, delays_per_chain),
            actual=(switch.chain_count, switch.delays_per_chain),
        )


def composite_precoder(
    switch: SwitchMatrix, fttd: FttdMatrix, digital: np.ndarray
) -> np.ndarray:
    """``S F D`` for one carrier: antenna ``i`` gets ``f[q_i] * D[l_i, :]``."""

    digital = np.asarray(digital)
    if digital.ndim == 1:
        digital = digital[:, None]
    _check_switch(switch, fttd.chain_count, fttd.delays_per_chain)
    if digital.shape[0] != fttd.chain_count:
        raise ShapeMismatchError(
            "Digital precoder rows must equal the chain count.",
            expected=fttd.chain_count,
            actual=digital.shape[0],
        )
    return fttd.phases[switch.delay_slots][:, None] * digital[switch.chains]


def composite_stack(
    switch: SwitchMatrix, stack: FttdStack, digital: np.ndarray
) -> np.ndarray:
    """``S F[m] D[m]`` for every carrier, shape ``(M, N_t, N_s)``."""

    _check_switch(switch, stack.chain_count, stack.delays_per_chain)
    if digital.ndim != 3 or digital.shape[:2] != (stack.carrier_count, stack.chain_count):
        raise ShapeMismatchError(
            "Digital precoders must be shaped (carriers, chains, streams).",
            expected=(stack.carrier_count, stack.chain_count),
            actual=digital.shape,
        )
    weights = stack.phases[:, switch.delay_slots]
    return weights[:, :, None] * digital[:, switch.chains, :]


def active_fttd_count(switch: SwitchMatrix) -> int:
    """Number of delay lines with at least one antenna attached."""

    return int(np.unique(switch.indices).size)

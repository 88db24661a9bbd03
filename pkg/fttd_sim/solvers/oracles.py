"""
Brute-force references for the RD solver, usable only on tiny instances.
"""

from __future__ import annotations

import itertools
from collections.abc import Iterator

import numpy as np

from fttd_sim.fttd import FttdStack, SwitchMatrix
from fttd_sim.solvers.rd import Targets, objective, target_array, update_digital


def enumerate_switch_matrices(
    n_antennas: int, chain_count: int, delays_per_chain: int
) -> Iterator[SwitchMatrix]:
    """Every valid switch matrix, in lexicographic order of the row positions."""

    columns = chain_count * delays_per_chain
    for positions in itertools.product(range(columns), repeat=n_antennas):
        yield SwitchMatrix(np.array(positions), chain_count, delays_per_chain)


def row_contribution(
    antenna: int,
    column: int,
    targets: Targets,
    stack: FttdStack,
    digital: np.ndarray,
) -> float:
    """``sum_m ||P[m][i, :] - f_q[m] D[m][l, :]||^2`` evaluated directly."""

    array = target_array(targets)
    chain, slot = divmod(column, stack.delays_per_chain)
    total = 0.0
    for m in range(array.shape[0]):
        row = array[m, antenna, :] - stack.phases[m, slot] * digital[m, chain, :]
        total += float(np.sum(np.abs(row) ** 2))
    return total


def exhaustive_switch_update(
    targets: Targets, stack: FttdStack, digital: np.ndarray
) -> SwitchMatrix:
    """Switch matrix minimizing the full objective for a fixed ``D`` by enumeration."""

    array = target_array(targets)
    best: SwitchMatrix | None = None
    best_value = np.inf
    for candidate in enumerate_switch_matrices(
        array.shape[1], stack.chain_count, stack.delays_per_chain
    ):
        value = objective(array, candidate, stack, digital)
        if value < best_value:
            best, best_value = candidate, value
    assert best is not None
    return best


def global_optimum(
    targets: Targets, stack: FttdStack
) -> tuple[SwitchMatrix, np.ndarray, float]:
    """Best (S, D) over every switch matrix with its Procrustes-optimal ``D``."""

    array = target_array(targets)
    best: tuple[SwitchMatrix, np.ndarray, float] | None = None
    for candidate in enumerate_switch_matrices(
        array.shape[1], stack.chain_count, stack.delays_per_chain
    ):
        digital = update_digital(array, candidate, stack).precoders
        value = objective(array, candidate, stack, digital)
        if best is None or value < best[2]:
            best = (candidate, digital, value)
    assert best is not None
    return best


def random_semi_unitary(
    rows: int, cols: int, rng: np.random.Generator, *, carriers: int | None = None
) -> np.ndarray:
    """Haar-distributed ``rows x cols`` matrices with orthonormal columns."""

    shape = (rows, cols) if carriers is None else (carriers, rows, cols)
    gaussian = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    q, r = np.linalg.qr(gaussian)
    diagonal = np.diagonal(r, axis1=-2, axis2=-1)
    phases = diagonal / np.where(np.abs(diagonal) == 0, 1.0, np.abs(diagonal))
    return q * phases[..., None, :]

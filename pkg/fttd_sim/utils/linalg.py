"""
Small dense linear-algebra kernels: water-filling, orthogonal Procrustes and
Hermitian log-determinants.
"""

from __future__ import annotations

import logging

import numpy as np
from numpy.typing import ArrayLike

from fttd_sim.exceptions import InvalidArgumentError, NumericalError

logger = logging.getLogger(__name__)

HERMITIAN_WARN_TOLERANCE = 1e-12
HERMITIAN_ERROR_TOLERANCE = 1e-8


def water_fill(gains: ArrayLike, total_power: float) -> tuple[np.ndarray, float]:
    """
    Capacity-optimal power split over parallel subchannels.

    Maximizes ``sum(log2(1 + p_i * g_i))`` subject to ``sum(p_i) = total_power``
    where ``g_i`` is the channel-to-noise gain of subchannel ``i``.

    Returns:
        The per-subchannel powers (same shape as ``gains``) and the water level.
        Subchannels with zero gain always receive zero power.
    """

    gains = np.asarray(gains, dtype=float)
    if total_power <= 0:
        raise InvalidArgumentError("Total power must be positive.")
    if np.any(gains < 0):
        raise InvalidArgumentError("Subchannel gains must be non-negative.")

    flat = gains.ravel()
    powers = np.zeros_like(flat)
    usable = np.flatnonzero(flat > 0)
    if usable.size == 0:
        return powers.reshape(gains.shape), 0.0

    order = usable[np.argsort(flat[usable])[::-1]]
    inverse = 1.0 / flat[order]
    active = np.arange(1, order.size + 1)
    levels = (total_power + np.cumsum(inverse)) / active
    # the level must stay above the floor of the weakest active subchannel
    feasible = np.flatnonzero(levels > inverse)
    count = int(feasible[-1]) + 1
    level = float(levels[count - 1])

    powers[order[:count]] = level - inverse[:count]
    return powers.reshape(gains.shape), level


def procrustes(cross: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Solve the orthogonal Procrustes problem from its cross-correlation matrix.

    For ``min ||B @ X - A||_F`` over semi-unitary ``X`` the caller passes
    ``cross = B^H A`` (shape ``(..., n, k)`` with ``n >= k``); the minimizer is
    ``U @ V^H`` from the thin SVD of ``cross``. Stacked inputs are solved
    carrier by carrier in one batched SVD.

    Returns:
        The semi-unitary solutions and the singular values of ``cross``.
    """

    u, sigma, vh = np.linalg.svd(cross, full_matrices=False)
    return u @ vh, sigma


def complete_orthonormal(basis: np.ndarray, columns: int) -> np.ndarray:
    """Extend an orthonormal ``(n, k)`` basis to ``columns`` orthonormal columns."""

    n, k = basis.shape
    if columns > n:
        raise InvalidArgumentError(
            f"Cannot build {columns} orthonormal columns in dimension {n}."
        )
    if columns <= k:
        return basis[:, :columns]
    q, _ = np.linalg.qr(basis, mode="complete")
    return np.concatenate([basis, q[:, k:columns]], axis=1)


def hermitian_deviation(matrix: np.ndarray) -> float:
    scale = float(np.linalg.norm(matrix))
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(matrix - matrix.conj().T)) / scale


def hermitian_logdet(matrix: np.ndarray) -> float:
    """
    Natural log-determinant of a Hermitian positive-definite matrix.

    Drift from Hermitian symmetry above ``HERMITIAN_ERROR_TOLERANCE`` (relative)
    is an internal error; smaller drift above ``HERMITIAN_WARN_TOLERANCE`` is
    logged and symmetrized away before the Cholesky factorization.
    """

    deviation = hermitian_deviation(matrix)
    if deviation > HERMITIAN_ERROR_TOLERANCE:
        raise NumericalError(
            f"Matrix deviates from Hermitian by {deviation:.3e}.",
            deviation=deviation,
        )
    if deviation > HERMITIAN_WARN_TOLERANCE:
        logger.warning(
            "linalg.hermitian.symmetrized",
            extra={"event": "linalg.hermitian.symmetrized", "deviation": deviation},
        )
    symmetric = 0.5 * (matrix + matrix.conj().T)
    try:
        factor = np.linalg.cholesky(symmetric)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            "Matrix is not positive definite.", deviation=deviation
        ) from exc
    return float(2.0 * np.sum(np.log(np.abs(np.diag(factor)))))

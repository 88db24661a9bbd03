"""
Spectral efficiency, transmitter power consumption and energy efficiency.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from fttd_sim.channel import ChannelSet
from fttd_sim.exceptions import InvalidArgumentError, MissingFieldError, ShapeMismatchError
from fttd_sim.fttd import FttdStack, SwitchMatrix, composite_stack
from fttd_sim.models import ArchitectureKind, ArchitectureSpec, DevicePowers
from fttd_sim.utils.linalg import hermitian_logdet

_LN2 = math.log(2.0)


def _effective_channel(
    channel: ChannelSet | np.ndarray, carrier: int, precoder: np.ndarray
) -> np.ndarray:
    if isinstance(channel, ChannelSet):
        return channel.apply(carrier, precoder)
    return channel[carrier] @ precoder


def carrier_spectral_efficiency(
    channel: ChannelSet | np.ndarray, precoders: np.ndarray, noise_power: float
) -> np.ndarray:
    """
    ``log2 det(I + H T T^H H^H / sigma^2)`` per carrier, in bits/s/Hz.

    Evaluated in the ``N_s x N_s`` Gram form ``I + (H T)^H (H T) / sigma^2``,
    which has the same determinant.
    """

    if noise_power <= 0:
        raise InvalidArgumentError("Noise power must be positive.")
    precoders = np.asarray(precoders)
    carriers = channel.carrier_count if isinstance(channel, ChannelSet) else len(channel)
    if precoders.ndim != 3 or precoders.shape[0] != carriers:
        raise ShapeMismatchError(
            "Precoders must be shaped (carriers, antennas, streams).",
            expected=carriers,
            actual=precoders.shape,
        )
    values = np.empty(carriers)
    identity = np.eye(precoders.shape[2])
    for m in range(carriers):
        received = _effective_channel(channel, m, precoders[m])
        gram = identity + received.conj().T @ received / noise_power
        values[m] = hermitian_logdet(gram) / _LN2
    return values


def precoder_spectral_efficiency(
    channel: ChannelSet | np.ndarray, precoders: np.ndarray, noise_power: float
) -> float:
    """Average spectral efficiency over carriers for arbitrary precoders."""

    return float(carrier_spectral_efficiency(channel, precoders, noise_power).mean())


def spectral_efficiency(
    channel: ChannelSet | np.ndarray,
    switch: SwitchMatrix,
    stack: FttdStack,
    digital: np.ndarray,
    noise_power: float,
) -> float:
    """Average spectral efficiency of the DS-FTTD precoders ``S F[m] D[m]``."""

    return precoder_spectral_efficiency(
        channel, composite_stack(switch, stack, digital), noise_power
    )


def _mw(value: float) -> Fraction:
    return Fraction(str(value)) / 1000


def _require(spec: ArchitectureSpec, name: str) -> int:
    value = getattr(spec, name)
    if value is None:
        raise MissingFieldError(
            f"{spec.kind.value} needs '{name}' for its power model.",
            kind=spec.kind.value,
            field=name,
        )
    return value


def _active_fttd(spec: ArchitectureSpec) -> int:
    if spec.active_fttd is not None:
        if spec.delays_per_chain is not None:
            ceiling = min(spec.antennas, spec.chains * spec.delays_per_chain)
            if spec.active_fttd > ceiling:
                raise InvalidArgumentError(
                    f"Active FTTD count {spec.active_fttd} exceeds {ceiling}."
                )
        return spec.active_fttd
    return spec.chains * _require(spec, "delays_per_chain")


def _analog_power(spec: ArchitectureSpec, dev: DevicePowers) -> Fraction:
    n_t, l_t = spec.antennas, spec.chains
    match spec.kind:
        case ArchitectureKind.DS_FTTD:
            return _mw(dev.switch) * n_t + _mw(dev.fttd) * _active_fttd(spec)
        case ArchitectureKind.FC_TTD:
            return _mw(dev.ttd) * n_t * l_t
        case ArchitectureKind.TTD_AIDED:
            return _mw(dev.phase_shifter) * n_t * l_t + _mw(dev.ttd) * _require(
                spec, "ttd_count"
            )
        case ArchitectureKind.FC_PS:
            return _mw(dev.phase_shifter) * n_t * l_t
        case ArchitectureKind.DS_PS:
            return (_mw(dev.phase_shifter) + _mw(dev.switch)) * n_t
        case ArchitectureKind.AOSA_PS:
            return _mw(dev.phase_shifter) * n_t
        case ArchitectureKind.GOSA:
            return _mw(dev.phase_shifter) * Fraction(n_t, _require(spec, "gosa_group"))
    raise InvalidArgumentError(f"Unknown architecture '{spec.kind}'.")  # pragma: no cover


def _splitter_power(spec: ArchitectureSpec, dev: DevicePowers) -> Fraction:
    n_t, l_t = spec.antennas, spec.chains
    divider, combiner = _mw(dev.power_divider), _mw(dev.power_combiner)
    match spec.kind:
        case ArchitectureKind.DS_FTTD:
            return divider * (l_t + _active_fttd(spec))
        case ArchitectureKind.TTD_AIDED:
            return divider * (l_t + _require(spec, "ttd_count")) + combiner * n_t
        case ArchitectureKind.FC_TTD | ArchitectureKind.FC_PS:
            return divider * l_t + combiner * n_t
        case ArchitectureKind.DS_PS | ArchitectureKind.AOSA_PS:
            return divider * l_t
        case ArchitectureKind.GOSA:
            return divider * (l_t + Fraction(n_t, _require(spec, "gosa_group")))
    raise InvalidArgumentError(f"Unknown architecture '{spec.kind}'.")  # pragma: no cover


def common_power(spec: ArchitectureSpec, dev: DevicePowers) -> float:
    """Shared part ``P_PA N_t + (P_RF + P_DAC) L_t + P_BB + rho`` in watts."""

    return float(_common_power(spec, dev))


def _common_power(spec: ArchitectureSpec, dev: DevicePowers) -> Fraction:
    return (
        _mw(dev.power_amplifier) * spec.antennas
        + (_mw(dev.rf_chain) + _mw(dev.dac)) * spec.chains
        + _mw(dev.baseband)
        + Fraction(str(spec.transmit_power))
    )


def analog_power(spec: ArchitectureSpec, dev: DevicePowers | None = None) -> float:
    """Power of the analog beamforming devices alone (phase shifters, delays, switches)."""

    return float(_analog_power(spec, dev or DevicePowers()))


def power_consumption(spec: ArchitectureSpec, dev: DevicePowers | None = None) -> float:
    """
    Total transmitter power in watts.

    Raises:
        MissingFieldError: when ``spec`` lacks a count its architecture needs.
    """

    dev = dev or DevicePowers()
    total = _common_power(spec, dev) + _analog_power(spec, dev) + _splitter_power(spec, dev)
    return float(total)


def energy_efficiency(spectral_efficiency: float, power: float) -> float:
    """Bits/s/Hz per watt."""

    if power <= 0:
        raise InvalidArgumentError("Power must be positive to compute energy efficiency.")
    return spectral_efficiency / power

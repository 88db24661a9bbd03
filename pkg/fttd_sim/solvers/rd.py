"""
Row-decomposition (RD) alternating minimization for DS-FTTD precoders.

The design problem is ``min sum_m ||P[m] - S F[m] D[m]||_F^2`` over one-hot
switch rows ``S`` and semi-unitary digital precoders ``D[m]``. With ``D``
fixed the objective splits into one independent problem per antenna row;
with ``S`` fixed each carrier is an orthogonal Procrustes problem. The power
constraint ``||S F[m] D[m]||_F = ||P[m]||_F`` is imposed once after the loop.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Any, NamedTuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from fttd_sim.channel import OptimalPrecoderSet
from fttd_sim.exceptions import (
    DegenerateSolutionError,
    InvalidArgumentError,
    ShapeMismatchError,
)
from fttd_sim.fttd import (
    FttdBank,
    FttdStack,
    SwitchMatrix,
    active_fttd_count,
    composite_stack,
    fttd_stack,
)
from fttd_sim.utils.linalg import procrustes

EventHook = Callable[[str, dict[str, Any]], None]
Targets = OptimalPrecoderSet | np.ndarray

_RANK_TOLERANCE = 1e-12


class RdConfig(BaseModel):
    """
    Iteration control for the RD solver.

    ``restarts`` seeded random switch patterns are tried, plus the
    target-aligned pattern when ``aligned_start`` is set; the run with the
    lowest final objective wins.
    """

    max_iterations: int = Field(50, ge=1)
    relative_tolerance: float = Field(1e-4, gt=0)
    seed: int = 0
    restarts: int = Field(1, ge=1)
    aligned_start: bool = False

    model_config = ConfigDict(frozen=True)


class DigitalUpdate(NamedTuple):
    precoders: np.ndarray
    degenerate_carriers: list[int]


@dataclass(slots=True)
class RdResult:
    """Outcome of one RD run; ``digital`` is already power-normalized."""

    switch: SwitchMatrix
    digital: np.ndarray
    objective_trace: list[float]
    iterations_used: int
    converged: bool
    final_objective: float
    degenerate_carriers: list[int] = field(default_factory=list)
    start: int = 0

    @property
    def active_fttd(self) -> int:
        return active_fttd_count(self.switch)

    def to_dict(self, *, include_digital: bool = False) -> dict[str, Any]:
        payload: dict[str, Any] = {
            "switch": self.switch.to_list(),
            "chains": self.switch.chain_count,
            "delays_per_chain": self.switch.delays_per_chain,
            "objective_trace": list(self.objective_trace),
            "iterations_used": self.iterations_used,
            "converged": self.converged,
            "final_objective": self.final_objective,
            "active_fttd": self.active_fttd,
            "digital_shape": list(self.digital.shape),
            "degenerate_carriers": list(self.degenerate_carriers),
            "start": self.start,
        }
        if include_digital:
            payload["digital_real"] = self.digital.real.tolist()
            payload["digital_imag"] = self.digital.imag.tolist()
        return payload


def target_array(targets: Targets) -> np.ndarray:
    array = targets.precoders if isinstance(targets, OptimalPrecoderSet) else targets
    array = np.asarray(array)
    if array.ndim != 3:
        raise ShapeMismatchError(
            "Targets must be shaped (carriers, antennas, streams).",
            expected=3,
            actual=array.ndim,
        )
    return array


def _check_layout(
    targets: np.ndarray, stack: FttdStack, digital: np.ndarray | None = None
) -> None:
    if targets.shape[0] != stack.carrier_count:
        raise ShapeMismatchError(
            "Targets and delay responses cover different carrier counts.",
            expected=stack.carrier_count,
            actual=targets.shape[0],
        )
    if digital is not None:
        expected = (stack.carrier_count, stack.chain_count, targets.shape[2])
        if digital.shape != expected:
            raise ShapeMismatchError(
                "Digital precoders do not match the targets.",
                expected=expected,
                actual=digital.shape,
            )


def objective(
    targets: Targets, switch: SwitchMatrix, stack: FttdStack, digital: np.ndarray
) -> float:
    """Squared Frobenius distance ``sum_m ||P[m] - S F[m] D[m]||^2``."""

    array = target_array(targets)
    _check_layout(array, stack, digital)
    if switch.n_antennas != array.shape[1]:
        raise ShapeMismatchError(
            "Switch rows must equal the antenna count.",
            expected=array.shape[1],
            actual=switch.n_antennas,
        )
    residual = array - composite_stack(switch, stack, digital)
    return float(np.vdot(residual, residual).real)


def switch_row_cost(
    antenna: int | slice, targets: Targets, stack: FttdStack, digital: np.ndarray
) -> np.ndarray:
    """
    Cost of every one-hot position for one antenna row, length ``L_t Q``.

    Position ``l Q + q`` costs
    ``sum_m -2 Re(f_q[m] D[m][l, :] P[m][i, :]^H) + ||D[m][l, :]||^2``; the
    rows never interact. A slice returns one cost row per selected antenna.
    """

    array = target_array(targets)
    _check_layout(array, stack, digital)
    rows = array[:, antenna, :]
    single = rows.ndim == 2
    if single:
        rows = rows[:, None, :]
    cross = np.einsum("mls,mis->mil", digital, rows.conj())
    correlated = np.einsum("mq,mil->ilq", stack.phases, cross)
    energy = np.einsum("mls,mls->l", digital, digital.conj()).real
    costs = (-2.0 * correlated.real + energy[None, :, None]).reshape(-1, stack.columns)
    return costs[0] if single else costs


def switch_costs(targets: Targets, stack: FttdStack, digital: np.ndarray) -> np.ndarray:
    """Row costs of every antenna at once, shape ``(N_t, L_t Q)``."""

    return switch_row_cost(slice(None), targets, stack, digital)


def update_switch(targets: Targets, stack: FttdStack, digital: np.ndarray) -> SwitchMatrix:
    """Row-wise argmin of the switch costs; the lowest column wins ties."""

    costs = switch_row_cost(slice(None), targets, stack, digital)
    return SwitchMatrix(costs.argmin(axis=1), stack.chain_count, stack.delays_per_chain)


def _selected_responses(switch: SwitchMatrix, stack: FttdStack) -> np.ndarray:
    # S F[m] as an (M, N_t, L_t) array: one delay phase per antenna row
    selector = np.eye(stack.chain_count)[switch.chains]
    weights = stack.phases[:, switch.delay_slots]
    return weights[:, :, None] * selector[None, :, :]


def update_digital(targets: Targets, switch: SwitchMatrix, stack: FttdStack) -> DigitalUpdate:
    """
    Semi-unitary ``D[m]`` closest to ``P[m]`` through ``S F[m]``.

    Carriers where ``(S F[m])^H P[m]`` has rank below ``N_s`` still get an
    orthonormal completion from the SVD; their indices are reported.
    """

    array = target_array(targets)
    _check_layout(array, stack)
    if array.shape[2] > stack.chain_count:
        raise InvalidArgumentError(
            "Stream count cannot exceed the chain count for semi-unitary precoders."
        )
    responses = _selected_responses(switch, stack)
    cross = np.einsum("mil,mis->mls", responses.conj(), array)
    precoders, sigma = procrustes(cross)
    largest = sigma.max(axis=1, initial=0.0)
    rank = (sigma > _RANK_TOLERANCE * largest[:, None]).sum(axis=1)
    degenerate = np.flatnonzero((largest == 0.0) | (rank < array.shape[2]))
    return DigitalUpdate(precoders, [int(m) for m in degenerate])


def normalize_power(
    targets: Targets, switch: SwitchMatrix, stack: FttdStack, digital: np.ndarray
) -> np.ndarray:
    """
    Scale ``D[m]`` so that ``||S F[m] D[m]||_F = ||P[m]||_F`` on every carrier.

    Raises:
        DegenerateSolutionError: when a carrier's composite precoder is zero
            while its target is not.
    """

    array = target_array(targets)
    _check_layout(array, stack, digital)
    target_norms = np.linalg.norm(array, axis=(1, 2))
    composite_norms = np.linalg.norm(composite_stack(switch, stack, digital), axis=(1, 2))
    broken = np.flatnonzero((composite_norms == 0.0) & (target_norms > 0.0))
    if broken.size:
        raise DegenerateSolutionError(
            f"Composite precoder vanishes on {broken.size} carrier(s).",
            carriers=[int(m) for m in broken],
        )
    safe = np.where(composite_norms == 0.0, 1.0, composite_norms)
    scale = np.where(composite_norms == 0.0, 1.0, target_norms / safe)
    return digital * scale[:, None, None]


def energy_matched(targets: Targets, chain_count: int) -> np.ndarray:
    """
    Targets rescaled to the energy ``S F D`` carries before normalization.

    With unit-modulus delay lines and semi-unitary ``D[m]`` that energy is
    ``M N_t N_s / L_t``; on the matched scale a relative objective decrease
    measures the fit rather than the power mismatch.
    """

    array = target_array(targets)
    n_carriers, n_antennas, n_streams = array.shape
    energy = float(np.vdot(array, array).real)
    if energy == 0.0:
        return array
    delivered = n_carriers * n_antennas * n_streams / chain_count
    return array * math.sqrt(delivered / energy)


def aligned_switch(
    targets: Targets, stack: FttdStack, *, reference: int | None = None
) -> SwitchMatrix:
    """
    Deterministic starting pattern derived from the targets.

    Each carrier's streams are rotated onto the phase-only beams of the
    reference carrier (the middle one by default), and one switch update
    against those rotations picks every antenna's chain and delay.
    """

    array = energy_matched(targets, stack.chain_count)
    _check_layout(array, stack)
    n_carriers, _, n_streams = array.shape
    if n_streams > stack.chain_count:
        raise InvalidArgumentError(
            "Stream count cannot exceed the chain count for semi-unitary precoders."
        )
    index = (n_carriers - 1) // 2 if reference is None else reference
    beams = np.exp(1j * np.angle(array[index]))
    cross = np.zeros((n_carriers, stack.chain_count, n_streams), dtype=complex)
    cross[:, :n_streams, :] = np.einsum("is,mit->mst", beams.conj(), array)
    digital, _ = procrustes(cross)
    return update_switch(array, stack, digital)


class _Run(NamedTuple):
    start: int
    switch: SwitchMatrix
    digital: np.ndarray
    trace: list[float]
    iterations: int
    converged: bool
    degenerate: list[int]

    @property
    def objective(self) -> float:
        return self.trace[-1]


@dataclass(slots=True)
class RdSolver:
    """Runs the RD iterations with logging and optional per-iteration events."""

    config: RdConfig = field(default_factory=RdConfig)
    logger: logging.Logger = field(default_factory=lambda: logging.getLogger(__name__))
    event_hook: EventHook | None = None

    def solve(
        self,
        targets: OptimalPrecoderSet,
        bank: FttdBank,
        *,
        initial_switch: SwitchMatrix | None = None,
    ) -> RdResult:
        return self.solve_stack(
            targets.precoders,
            fttd_stack(bank, targets.frequencies),
            initial_switch=initial_switch,
        )

    def solve_stack(
        self,
        targets: np.ndarray,
        stack: FttdStack,
        *,
        initial_switch: SwitchMatrix | None = None,
    ) -> RdResult:
        """
        Run every configured start and keep the lowest final objective.

        The iterations work on :func:`energy_matched` targets; the reported
        ``final_objective`` is measured against the original targets after
        power normalization. An ``initial_switch`` replaces all other starts.
        """

        array = target_array(targets)
        _check_layout(array, stack)
        n_carriers, n_antennas, n_streams = array.shape
        starts = self._starting_switches(array, stack, initial_switch)

        start = {
            "antennas": n_antennas,
            "chains": stack.chain_count,
            "delays_per_chain": stack.delays_per_chain,
            "carriers": n_carriers,
            "streams": n_streams,
            "seed": self.config.seed,
            "starts": len(starts),
        }
        self.logger.info("rd.solve.start", extra={"event": "rd.solve.start", **start})
        self._emit_event("rd.solve.start", start)

        matched = energy_matched(array, stack.chain_count)
        runs = [
            self._iterate(matched, stack, switch, index)
            for index, switch in enumerate(starts)
        ]
        best = min(runs, key=lambda run: run.objective)

        summary = {
            "iterations": best.iterations,
            "objective": best.objective,
            "start": best.start,
        }
        if best.converged:
            self.logger.info(
                "rd.solve.converged", extra={"event": "rd.solve.converged", **summary}
            )
            self._emit_event("rd.solve.converged", summary)
        else:
            self.logger.warning(
                "rd.solve.max_iterations",
                extra={"event": "rd.solve.max_iterations", **summary},
            )
            self._emit_event("rd.solve.max_iterations", summary)

        if best.degenerate:
            self.logger.warning(
                "rd.digital.degenerate",
                extra={"event": "rd.digital.degenerate", "carriers": best.degenerate},
            )
            self._emit_event("rd.digital.degenerate", {"carriers": best.degenerate})

        try:
            digital = normalize_power(array, best.switch, stack, best.digital)
        except DegenerateSolutionError as exc:
            self.logger.error(
                "rd.digital.degenerate",
                extra={"event": "rd.digital.degenerate", "carriers": exc.carriers},
            )
            self._emit_event("rd.digital.degenerate", {"carriers": exc.carriers})
            raise

        return RdResult(
            switch=best.switch,
            digital=digital,
            objective_trace=best.trace,
            iterations_used=best.iterations,
            converged=best.converged,
            final_objective=objective(array, best.switch, stack, digital),
            degenerate_carriers=best.degenerate,
            start=best.start,
        )

    def _starting_switches(
        self,
        array: np.ndarray,
        stack: FttdStack,
        initial_switch: SwitchMatrix | None,
    ) -> list[SwitchMatrix]:
        n_antennas = array.shape[1]
        if initial_switch is not None:
            if (
                initial_switch.n_antennas != n_antennas
                or initial_switch.columns != stack.columns
            ):
                raise ShapeMismatchError(
                    "Initial switch does not fit the targets and delay bank.",
                    expected=(n_antennas, stack.columns),
                    actual=(initial_switch.n_antennas, initial_switch.columns),
                )
            return [initial_switch]

        cfg = self.config
        rng = np.random.default_rng(cfg.seed)
        starts = [
            SwitchMatrix.random(n_antennas, stack.chain_count, stack.delays_per_chain, rng)
            for _ in range(cfg.restarts)
        ]
        if cfg.aligned_start:
            starts.append(aligned_switch(array, stack))
        return starts

    def _iterate(
        self, array: np.ndarray, stack: FttdStack, switch: SwitchMatrix, start: int
    ) -> _Run:
        cfg = self.config
        update = update_digital(array, switch, stack)
        digital = update.precoders
        degenerate = set(update.degenerate_carriers)
        current = objective(array, switch, stack, digital)
        trace = [current]
        self._report_iteration(start, 0, current, switch, digital)

        converged = False
        iterations = 0
        for iteration in range(1, cfg.max_iterations + 1):
            iterations = iteration
            next_switch = update_switch(array, stack, digital)
            switch_changed = next_switch != switch
            switch = next_switch
            value = objective(array, switch, stack, digital)

            update = update_digital(array, switch, stack)
            candidate = objective(array, switch, stack, update.precoders)
            # Procrustes is exact only for equally loaded chains; never step uphill
            if candidate <= value:
                digital = update.precoders
                value = candidate
                degenerate.update(update.degenerate_carriers)

            trace.append(value)
            self._report_iteration(start, iteration, value, switch, digital)

            previous, current = current, value
            threshold = cfg.relative_tolerance * max(previous, np.finfo(float).tiny)
            if not switch_changed or previous - value <= threshold:
                converged = True
                break

        self.logger.debug(
            "rd.start.done",
            extra={
                "event": "rd.start.done",
                "start": start,
                "iterations": iterations,
                "objective": current,
            },
        )
        return _Run(start, switch, digital, trace, iterations, converged, sorted(degenerate))

    def _report_iteration(
        self,
        start: int,
        iteration: int,
        value: float,
        switch: SwitchMatrix,
        digital: np.ndarray,
    ) -> None:
        self.logger.debug(
            "rd.iteration",
            extra={
                "event": "rd.iteration",
                "start": start,
                "iteration": iteration,
                "objective": value,
            },
        )
        self._emit_event(
            "rd.iteration",
            {
                "start": start,
                "iteration": iteration,
                "objective": value,
                "switch": switch,
                "digital": digital,
            },
        )

    def _emit_event(self, name: str, payload: dict[str, Any]) -> None:
        if self.event_hook is None:
            return
        try:
            self.event_hook(name, payload)
        except Exception:  # pragma: no cover - defensive
            self.logger.exception(
                "rd.event_hook.error",
                extra={"event": "rd.event_hook.error", "hook_event": name},
            )


def rd_solve(
    targets: OptimalPrecoderSet,
    bank: FttdBank,
    config: RdConfig | None = None,
    *,
    initial_switch: SwitchMatrix | None = None,
    event_hook: EventHook | None = None,
) -> RdResult:
    """Functional front door for :class:`RdSolver`."""

    solver = RdSolver(config=config or RdConfig(), event_hook=event_hook)
    return solver.solve(targets, bank, initial_switch=initial_switch)

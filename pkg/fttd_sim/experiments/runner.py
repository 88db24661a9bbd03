"""
Sweep execution for every experiment kind.

A sweep expands into independent ``(sweep point, seed)`` tasks that run on a
thread pool; rows are merged in declaration order so identical configs give
identical tables.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from functools import lru_cache, partial
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from fttd_sim.baselines import narrowband_phase_shifter, steering_targets
from fttd_sim.channel import (
    ChannelSet,
    OptimalPrecoderSet,
    carrier_noise_power,
    generate_channel,
    optimal_precoders,
    perturb_csi,
)
from fttd_sim.config import ChannelSection, ExperimentConfig, ExperimentKind
from fttd_sim.exceptions import DegenerateSolutionError, FttdSimError
from fttd_sim.experiments.schema import (
    MEAN_SEED,
    RESULT_COLUMNS,
    ResultRow,
    RunManifest,
)
from fttd_sim.fttd import FttdBank, build_delay_bank, composite_stack, fttd_stack
from fttd_sim.geometry import square_array
from fttd_sim.metrics import (
    energy_efficiency,
    power_consumption,
    precoder_spectral_efficiency,
    spectral_efficiency,
)
from fttd_sim.models import (
    ArchitectureKind,
    ArchitectureSpec,
    FrequencyGrid,
    UpaGeometry,
)
from fttd_sim.solvers.rd import RdResult, RdSolver, normalize_power
from fttd_sim.squint import array_gain_profile, average_gain_db, beamforming_gain, gain_loss_db
from fttd_sim.utils.conversion import dbm_to_watts, linear_to_db

EventHook = Callable[[str, dict[str, Any]], None]
Task = Callable[[], list[ResultRow]]

OPTIMAL_BOUND = "se_source=optimal-bound"
POWER_ONLY = "se_source=none"
GAIN_AVERAGES = (("average_gain_db", "db"), ("average_gain_db_linear", "linear"))


@lru_cache(maxsize=32)
def _channel(
    transmit: UpaGeometry,
    receive: UpaGeometry,
    grid: FrequencyGrid,
    section: ChannelSection,
    seed: int,
) -> ChannelSet:
    return generate_channel(
        transmit,
        receive,
        grid,
        section.antenna(),
        section.path_count,
        seed,
        distance=section.distance,
        max_path_delay=section.max_path_delay,
        nlos_attenuation_db=section.nlos_attenuation_db,
    )


@dataclass(frozen=True, slots=True)
class SweepPoint:
    """Everything that varies along a link-level sweep."""

    parameter: str
    value: float
    transmit: UpaGeometry
    receive: UpaGeometry
    grid: FrequencyGrid
    transmit_power: float
    delays_per_chain: int
    csi_accuracy: float | None = None


@dataclass(slots=True)
class _Outcome:
    result: RdResult | None
    annotation: str


@dataclass(slots=True)
class ExperimentRunner:
    """Runs one configured experiment and writes its CSV table and manifest."""

    config: ExperimentConfig
    logger: logging.Logger = field(default_factory=lambda: logging.getLogger(__name__))
    event_hook: EventHook | None = None

    @property
    def kind(self) -> ExperimentKind:
        if self.config.experiment is None:
            raise FttdSimError("No experiment kind configured.")
        return self.config.experiment

    @property
    def seeds(self) -> list[int]:
        """Channel seeds the experiment uses; deterministic kinds use none."""

        return list(self.config.seeds) if self.kind.stochastic else []

    # ========================================================================
    # Orchestration
    # ========================================================================

    def run(self) -> pd.DataFrame:
        kind = self.kind
        tasks = self._tasks(kind)
        self.logger.info(
            "experiment.start",
            extra={
                "event": "experiment.start",
                "experiment": kind.value,
                "tasks": len(tasks),
                "threads": self.config.threads,
            },
        )
        self._emit_event(
            "experiment.start",
            {"experiment": kind.value, "tasks": len(tasks), "threads": self.config.threads},
        )

        rows: list[ResultRow] = []
        try:
            with ThreadPoolExecutor(max_workers=self.config.threads) as pool:
                for index, task_rows in enumerate(pool.map(lambda task: task(), tasks)):
                    rows.extend(task_rows)
                    self.logger.debug(
                        "experiment.task.done",
                        extra={"event": "experiment.task.done", "task": index},
                    )
                    self._emit_event(
                        "experiment.task.done", {"task": index, "rows": len(task_rows)}
                    )
        except FttdSimError as exc:
            self.logger.exception(
                "experiment.error",
                extra={"event": "experiment.error", "error": str(exc)},
            )
            self._emit_event(
                "experiment.error",
                {"experiment": kind.value, "error": str(exc), "error_type": type(exc).__name__},
            )
            raise

        frame = self._with_means(rows)
        self.logger.info(
            "experiment.success",
            extra={"event": "experiment.success", "experiment": kind.value, "rows": len(frame)},
        )
        self._emit_event("experiment.success", {"experiment": kind.value, "rows": len(frame)})
        return frame

    def write(
        self, frame: pd.DataFrame, output: Path | str | None = None
    ) -> tuple[Path, Path]:
        """Write the table as CSV plus an adjacent JSON manifest."""

        from fttd_sim import __version__

        target = self._output_path(output)
        target.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(target, index=False, float_format="%.10g")

        manifest = RunManifest(
            experiment=self.kind.value,
            profile=self.config.profile,
            library_version=__version__,
            seeds=self.seeds,
            threads=self.config.threads,
            rows=len(frame),
            results_file=target.name,
            created_at=datetime.now(timezone.utc),
            config=self.config.model_dump(mode="json"),
        )
        manifest_path = target.with_suffix(".json")
        manifest_path.write_text(manifest.model_dump_json(indent=2) + "\n", encoding="utf-8")
        return target, manifest_path

    def _output_path(self, output: Path | str | None) -> Path:
        path = Path(output) if output is not None else self.config.output
        if path is None:
            return Path("results") / f"{self.kind.value}.csv"
        if path.suffix.lower() != ".csv":
            return path / f"{self.kind.value}.csv"
        return path

    def _with_means(self, rows: Sequence[ResultRow]) -> pd.DataFrame:
        frame = pd.DataFrame([row.model_dump() for row in rows], columns=list(RESULT_COLUMNS))
        seeded = frame[frame["seed"] != ""]
        if seeded.empty or len(self.seeds) < 2:
            return frame.reset_index(drop=True)
        keys = ["experiment", "parameter", "value", "series", "metric"]
        means = (
            seeded.groupby(keys, sort=False)
            .agg(result=("result", "mean"), annotation=("annotation", _shared_annotation))
            .reset_index()
        )
        means["seed"] = MEAN_SEED
        return pd.concat([frame, means[list(RESULT_COLUMNS)]], ignore_index=True)

    # ========================================================================
    # Task construction
    # ========================================================================

    def _tasks(self, kind: ExperimentKind) -> list[Task]:
        if kind is ExperimentKind.GAIN_VS_FREQUENCY:
            return [self._gain_vs_frequency]
        if kind is ExperimentKind.GAIN_VS_Q:
            return [
                partial(self._gain_vs_delays, delays, seed)
                for delays in self.config.sweep.delay_counts
                for seed in self.seeds
            ]
        if kind is ExperimentKind.CONVERGENCE_TRACE:
            return [partial(self._convergence, seed) for seed in self.seeds]

        with_power = kind in (
            ExperimentKind.EE_VS_Q,
            ExperimentKind.EE_VS_POWER,
            ExperimentKind.EE_VS_ANTENNAS,
        )
        return [
            partial(self._link_point, point, seed, with_power)
            for point in self._sweep_points(kind)
            for seed in self.seeds
        ]

    def _base_point(self, parameter: str, value: float) -> SweepPoint:
        cfg = self.config
        center = cfg.grid.center_frequency
        return SweepPoint(
            parameter=parameter,
            value=value,
            transmit=cfg.array.transmit(center),
            receive=cfg.array.receive(center),
            grid=cfg.grid.build(),
            transmit_power=dbm_to_watts(cfg.architecture.transmit_power_dbm),
            delays_per_chain=cfg.architecture.delays_per_chain,
        )

    def _sweep_points(self, kind: ExperimentKind) -> list[SweepPoint]:
        cfg = self.config
        sweep = cfg.sweep
        center = cfg.grid.center_frequency
        points: list[SweepPoint] = []
        if kind in (ExperimentKind.SE_VS_Q, ExperimentKind.EE_VS_Q):
            for delays in sweep.delay_counts:
                base = self._base_point("delays_per_chain", delays)
                points.append(replace(base, delays_per_chain=delays))
        elif kind in (ExperimentKind.SE_VS_POWER, ExperimentKind.EE_VS_POWER):
            for power_dbm in sweep.transmit_powers_dbm:
                base = self._base_point("transmit_power_dbm", power_dbm)
                points.append(replace(base, transmit_power=dbm_to_watts(power_dbm)))
        elif kind in (ExperimentKind.SE_VS_ANTENNAS, ExperimentKind.EE_VS_ANTENNAS):
            for antennas in sweep.antenna_counts:
                geom = square_array(antennas, center, cfg.array.spacing)
                base = self._base_point("antennas", antennas)
                points.append(replace(base, transmit=geom, receive=geom))
        elif kind is ExperimentKind.SE_VS_BANDWIDTH:
            reference = self._base_point("bandwidth_ghz", 0.0)
            # transmit power scales with bandwidth so the power density stays fixed
            density = reference.transmit_power / cfg.grid.bandwidth
            for bandwidth_ghz in sweep.bandwidths_ghz:
                bandwidth = bandwidth_ghz * 1e9
                points.append(
                    replace(
                        reference,
                        value=bandwidth_ghz,
                        grid=cfg.grid.build(bandwidth=bandwidth),
                        transmit_power=density * bandwidth,
                    )
                )
        elif kind is ExperimentKind.SE_VS_CSI:
            for accuracy in sweep.csi_accuracies:
                base = self._base_point("csi_accuracy", accuracy)
                points.append(replace(base, csi_accuracy=accuracy))
        return points

    # ========================================================================
    # Tasks
    # ========================================================================

    def _gain_vs_frequency(self) -> list[ResultRow]:
        cfg = self.config
        geom = cfg.array.transmit(cfg.grid.center_frequency)
        grid = cfg.grid.build()
        frequencies = np.linspace(
            grid.center - grid.bandwidth / 2,
            grid.center + grid.bandwidth / 2,
            cfg.sweep.frequency_points,
        )
        gains = array_gain_profile(geom, cfg.sweep.squint_target, frequencies)
        full_gain_db = float(linear_to_db(geom.antenna_count))
        gains_db = np.atleast_1d(linear_to_db(gains))
        rows: list[ResultRow] = []
        for frequency, gain, gain_db in zip(frequencies, gains, gains_db):
            row = partial(
                ResultRow,
                experiment=self.kind.value,
                parameter="frequency_ghz",
                value=float(frequency / 1e9),
            )
            rows.append(
                row(series="narrowband", metric="array_gain_db", result=float(gain_db))
            )
            rows.append(
                row(series="narrowband", metric="gain_loss_db", result=gain_loss_db(geom, gain))
            )
            rows.append(row(series="ideal-ttd", metric="array_gain_db", result=full_gain_db))
        return rows

    def _gain_vs_delays(self, delays: int, seed: int) -> list[ResultRow]:
        cfg = self.config
        geom = cfg.array.transmit(cfg.grid.center_frequency)
        grid = cfg.grid.build()
        target = cfg.sweep.target
        targets = steering_targets(geom, grid, target)
        bank = build_delay_bank(geom, 1, delays)
        outcome = self._solve(targets, bank, seed)

        row = partial(
            ResultRow,
            experiment=self.kind.value,
            parameter="delays_per_chain",
            value=float(delays),
            seed=str(seed),
        )
        narrowband = array_gain_profile(geom, target, grid.carriers)
        full_gain_db = float(linear_to_db(geom.antenna_count))
        rows: list[ResultRow] = []
        for metric, domain in GAIN_AVERAGES:
            rows.append(
                row(series="narrowband", metric=metric,
                    result=average_gain_db(narrowband, domain=domain))
            )
            rows.append(row(series="ideal-ttd", metric=metric, result=full_gain_db))
        if outcome.result is None:
            rows.append(
                row(series="ds-fttd", metric="average_gain_db", result=math.nan,
                    annotation=outcome.annotation)
            )
            return rows

        result = outcome.result
        stack = fttd_stack(bank, grid.carriers)
        # power normalization gives the weights the norm of the steering vectors
        weights = composite_stack(result.switch, stack, result.digital)[:, :, 0]
        responses = targets.precoders[:, :, 0]
        gains = [
            beamforming_gain(weights[m], responses[m]) for m in range(grid.carrier_count)
        ]
        for metric, domain in GAIN_AVERAGES:
            rows.append(
                row(series="ds-fttd", metric=metric,
                    result=average_gain_db(gains, domain=domain),
                    annotation=outcome.annotation)
            )
        rows.extend(
            [
                row(series="ds-fttd", metric="iterations", result=float(result.iterations_used)),
                row(series="ds-fttd", metric="active_fttd", result=float(result.active_fttd)),
            ]
        )
        return rows

    def _link_point(self, point: SweepPoint, seed: int, with_power: bool) -> list[ResultRow]:
        cfg = self.config
        arch = cfg.architecture
        channel = _channel(point.transmit, point.receive, point.grid, cfg.channel, seed)
        noise = carrier_noise_power(point.grid, cfg.channel.noise_figure_db)
        design = channel
        if point.csi_accuracy is not None and point.csi_accuracy < 1.0:
            design = perturb_csi(
                channel, point.csi_accuracy, seed=seed + cfg.channel.csi_seed_offset
            )

        targets = optimal_precoders(design, arch.streams, point.transmit_power, noise)
        bank = build_delay_bank(point.transmit, arch.chains, point.delays_per_chain)
        outcome = self._solve(targets, bank, seed)

        se_optimal = precoder_spectral_efficiency(channel, targets.precoders, noise)
        se_narrowband = precoder_spectral_efficiency(
            channel, narrowband_phase_shifter(targets).precoders, noise
        )
        if outcome.result is not None:
            stack = fttd_stack(bank, point.grid.carriers)
            se_fttd = spectral_efficiency(
                channel, outcome.result.switch, stack, outcome.result.digital, noise
            )
        else:
            se_fttd = math.nan

        row = partial(
            ResultRow,
            experiment=self.kind.value,
            parameter=point.parameter,
            value=float(point.value),
            seed=str(seed),
        )
        rows = [
            row(series="optimal", metric="spectral_efficiency", result=se_optimal),
            row(series="fc-ps-narrowband", metric="spectral_efficiency", result=se_narrowband),
            row(series="ds-fttd", metric="spectral_efficiency", result=se_fttd,
                annotation=outcome.annotation),
        ]
        if outcome.result is not None:
            rows.append(
                row(series="ds-fttd", metric="active_fttd",
                    result=float(outcome.result.active_fttd))
            )
            rows.append(
                row(series="ds-fttd", metric="iterations",
                    result=float(outcome.result.iterations_used))
            )
        if with_power:
            rows.extend(
                self._architecture_rows(
                    row, point, outcome, se_fttd, se_narrowband, se_optimal
                )
            )
        return rows

    def _architecture_rows(
        self,
        row: Callable[..., ResultRow],
        point: SweepPoint,
        outcome: _Outcome,
        se_fttd: float,
        se_narrowband: float,
        se_optimal: float,
    ) -> list[ResultRow]:
        arch = self.config.architecture
        active = (
            outcome.result.active_fttd
            if outcome.result is not None
            else arch.chains * point.delays_per_chain
        )
        spectral = {
            ArchitectureKind.DS_FTTD: (se_fttd, outcome.annotation),
            ArchitectureKind.FC_PS: (se_narrowband, ""),
            ArchitectureKind.FC_TTD: (se_optimal, OPTIMAL_BOUND),
            ArchitectureKind.TTD_AIDED: (se_optimal, OPTIMAL_BOUND),
        }
        rows: list[ResultRow] = []
        for kind in ArchitectureKind:
            spec = ArchitectureSpec(
                kind=kind,
                antennas=point.transmit.antenna_count,
                chains=arch.chains,
                transmit_power=point.transmit_power,
                delays_per_chain=point.delays_per_chain,
                ttd_count=arch.ttd_count,
                gosa_group=arch.gosa_group,
                active_fttd=active if kind is ArchitectureKind.DS_FTTD else None,
            )
            power = power_consumption(spec, self.config.devices)
            rows.append(row(series=kind.value, metric="power_w", result=power))
            if kind not in spectral:
                rows.append(
                    row(series=kind.value, metric="energy_efficiency", result=math.nan,
                        annotation=POWER_ONLY)
                )
                continue
            se, note = spectral[kind]
            rows.append(row(series=kind.value, metric="spectral_efficiency", result=se,
                            annotation=note))
            rows.append(
                row(series=kind.value, metric="energy_efficiency",
                    result=energy_efficiency(se, power), annotation=note)
            )
        return rows

    def _convergence(self, seed: int) -> list[ResultRow]:
        cfg = self.config
        point = self._base_point("iteration", 0.0)
        channel = _channel(point.transmit, point.receive, point.grid, cfg.channel, seed)
        noise = carrier_noise_power(point.grid, cfg.channel.noise_figure_db)
        targets = optimal_precoders(
            channel, cfg.architecture.streams, point.transmit_power, noise
        )
        bank = build_delay_bank(point.transmit, cfg.architecture.chains, point.delays_per_chain)
        stack = fttd_stack(bank, point.grid.carriers)

        by_start: dict[int, list[dict[str, Any]]] = {}

        def capture(name: str, payload: dict[str, Any]) -> None:
            if name == "rd.iteration":
                by_start.setdefault(payload["start"], []).append(payload)

        outcome = self._solve(targets, bank, seed, event_hook=capture)
        # only the winning start is traced
        iterates = by_start.get(outcome.result.start if outcome.result else 0, [])
        row = partial(
            ResultRow, experiment=self.kind.value, parameter="iteration", seed=str(seed)
        )
        rows: list[ResultRow] = []
        for state in iterates:
            value = float(state["iteration"])
            rows.append(
                row(value=value, series="ds-fttd", metric="objective",
                    result=float(state["objective"]))
            )
            try:
                digital = normalize_power(
                    targets, state["switch"], stack, state["digital"]
                )
                se = spectral_efficiency(channel, state["switch"], stack, digital, noise)
                note = ""
            except DegenerateSolutionError as exc:
                se, note = math.nan, _degenerate_note(exc.carriers)
            rows.append(
                row(value=value, series="ds-fttd", metric="spectral_efficiency",
                    result=se, annotation=note)
            )
        se_optimal = precoder_spectral_efficiency(channel, targets.precoders, noise)
        for state in iterates:
            rows.append(
                row(value=float(state["iteration"]), series="optimal",
                    metric="spectral_efficiency", result=se_optimal)
            )
        if outcome.annotation:
            rows.append(
                row(value=float(len(iterates) - 1), series="ds-fttd", metric="status",
                    result=math.nan, annotation=outcome.annotation)
            )
        return rows

    # ========================================================================
    # Helpers
    # ========================================================================

    def _solve(
        self,
        targets: OptimalPrecoderSet,
        bank: FttdBank,
        seed: int,
        *,
        event_hook: EventHook | None = None,
    ) -> _Outcome:
        rd = self.config.rd.model_copy(update={"seed": self.config.rd.seed + seed})
        solver = RdSolver(config=rd, event_hook=event_hook)
        try:
            result = solver.solve(targets, bank)
        except DegenerateSolutionError as exc:
            if self.config.strict:
                raise
            return _Outcome(None, _degenerate_note(exc.carriers))
        if result.degenerate_carriers:
            if self.config.strict:
                raise DegenerateSolutionError(
                    "Digital precoder update was rank deficient.",
                    carriers=result.degenerate_carriers,
                )
            return _Outcome(result, _degenerate_note(result.degenerate_carriers))
        return _Outcome(result, "")

    def _emit_event(self, name: str, payload: dict[str, Any]) -> None:
        if self.event_hook is None:
            return
        try:
            self.event_hook(name, payload)
        except Exception:  # pragma: no cover - defensive
            self.logger.exception(
                "experiment.event_hook.error",
                extra={"event": "experiment.event_hook.error", "hook_event": name},
            )


def _degenerate_note(carriers: Sequence[int]) -> str:
    return "degenerate_carriers=" + ";".join(str(c) for c in carriers)


def _shared_annotation(values: pd.Series) -> str:
    unique = {value for value in values if value}
    return unique.pop() if len(unique) == 1 else ""


def run_experiment(
    config: ExperimentConfig, *, output: Path | str | None = None, write: bool = True
) -> pd.DataFrame:
    """Run the configured experiment and, by default, write its outputs."""

    runner = ExperimentRunner(config)
    frame = runner.run()
    if write:
        runner.write(frame, output)
    return frame

"""End-to-end experiment driver.

Loads a machine, compiles the self-looping circuit, measures the clock
observable's orbit, samples accuracy-limited outcomes, and decides the
machine's answer, comparing against ground truth from direct simulation.
Every stage failure is re-raised tagged with the stage name. Reports are
reproducible: the same config and seed give byte-identical report files
(wall-clock timing is kept out of the serialized report for that reason).
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any

from . import circuits, clock, metrology, rtm
from .errors import ClockObsError, StageError

AUTO_ACCURACY = "auto"


@dataclass(frozen=True)
class ExperimentConfig:
    spec_path: str
    input_word: str
    accuracy: float | str = AUTO_ACCURACY  # "auto" means 1/(r*s)
    samples_per_batch: int = 200
    batch_count: int = 1
    seed: int = 0
    out_dir: str | None = None
    merge_cells: bool = True
    max_run_steps: int | None = None

    def __post_init__(self) -> None:
        if self.samples_per_batch < 1:
            raise ValueError("samples_per_batch must be >= 1")
        if self.batch_count < 1:
            raise ValueError("batch_count must be >= 1")
        if self.accuracy != AUTO_ACCURACY:
            if not isinstance(self.accuracy, (int, float)) or self.accuracy <= 0:
                raise ValueError(f"accuracy must be positive or 'auto', got {self.accuracy!r}")

    @classmethod
    def from_json_file(cls, path) -> "ExperimentConfig":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(**data)


@dataclass(frozen=True)
class ExperimentReport:
    machine: dict[str, Any]  # name, m, tape_cells, gate_count
    r_nominal: int
    d_observed: int
    f_ground_truth: int
    decision: metrology.DecisionResult
    spectral_summary: dict[str, Any]
    locality_max_support: int
    agreement: bool
    accuracy: float
    accuracy_coarser_than_grid: bool
    seed: int
    config: dict[str, Any]
    timing_seconds: float  # excluded from the serialized report

    def to_json_dict(self) -> dict[str, Any]:
        out = {
            "machine": self.machine,
            "r_nominal": self.r_nominal,
            "d_observed": self.d_observed,
            "f_ground_truth": self.f_ground_truth,
            "decision": asdict(self.decision),
            "spectral_summary": self.spectral_summary,
            "locality_max_support": self.locality_max_support,
            "agreement": self.agreement,
            "accuracy": self.accuracy,
            "accuracy_coarser_than_grid": self.accuracy_coarser_than_grid,
            "seed": self.seed,
            "config": self.config,
            "tool_version": _version(),
        }
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2) + "\n"


def _version() -> str:
    from . import __version__

    return __version__


def _stage(name: str):
    class _Ctx:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc is not None and not isinstance(exc, StageError):
                raise StageError(name, exc) from exc
            return False

    return _Ctx()


def batch_seed(seed: int, batch_index: int) -> list[int]:
    """Counter-style seed key: serial and parallel runs draw identically."""
    return [seed, batch_index]


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    started = time.perf_counter()

    with _stage("parse"):
        spec = rtm.parse_rtm_file(config.spec_path)

    with _stage("validate"):
        report = rtm.check_reversibility(spec)
        if not report.is_reversible:
            first = report.violations[0].message
            raise ClockObsError(
                f"machine is not reversible ({len(report.violations)} violations; "
                f"first: {first})"
            )

    with _stage("ground-truth"):
        m = circuits.state_bits(spec)
        budget = config.max_run_steps or 4 * 2 ** (m + 1)
        truth = rtm.run_machine(spec, config.input_word, max_steps=budget)
        if not truth.halted:
            raise ClockObsError(
                f"machine did not halt within {budget} steps; cannot certify"
            )

    with _stage("compile"):
        circuit = circuits.build_wrapper_circuit(spec, merge_cells=config.merge_cells)
        layout = circuit.layout
        r_nominal = circuits.nominal_cycle_length(layout.m)
        op = clock.ForwardOperator(circuit)
        locality = clock.locality_report(op)

    with _stage("orbit"):
        initial = clock.ClockedState(layout.initial_basis_state(config.input_word), 1)
        orbit = clock.compute_orbit(op, initial)

    with _stage("spectrum"):
        model = clock.spectral_model(orbit.dimension)
        gap_top = 1.0 - model.lines[1].eigenvalue if orbit.dimension > 1 else 0.0

    # the experimenter-side grid: nominal cycle length, not the observed one,
    # so the accuracy choice cannot leak the answer
    grid_r, grid_s = r_nominal, circuit.s
    accuracy = (
        1.0 / (grid_r * grid_s) if config.accuracy == AUTO_ACCURACY else float(config.accuracy)
    )

    with _stage("sample"):
        acc_model = metrology.AccuracyModel(delta=accuracy)
        values: list[float] = []
        for b in range(config.batch_count):
            batch = metrology.draw_batch(
                acc_model,
                model,
                config.samples_per_batch,
                seed=batch_seed(config.seed, b),
                r=grid_r,
                s=grid_s,
            )
            values.extend(batch.values)
        pooled = metrology.SampleBatch(
            values=tuple(values),
            seed=config.seed,
            model=acc_model,
            d=orbit.dimension,
            r=grid_r,
            s=grid_s,
        )

    with _stage("decide"):
        decision = metrology.decide(pooled, grid_r, grid_s)

    elapsed = time.perf_counter() - started
    report = ExperimentReport(
        machine={
            "name": spec.name,
            "m": layout.m,
            "tape_cells": spec.tape_cells,
            "gate_count": circuit.s,
        },
        r_nominal=r_nominal,
        d_observed=orbit.dimension,
        f_ground_truth=truth.f_of_x,
        decision=decision,
        spectral_summary={
            "d": orbit.dimension,
            "distinct_eigenvalues": len(model.lines),
            "top_gap": gap_top,
        },
        locality_max_support=locality.max_support,
        agreement=decision.verdict == truth.f_of_x,
        accuracy=accuracy,
        accuracy_coarser_than_grid=accuracy > 1.0 / (grid_r * grid_s) + 1e-15,
        seed=config.seed,
        config={
            "spec_path": str(config.spec_path),
            "input_word": config.input_word,
            "accuracy": config.accuracy,
            "samples_per_batch": config.samples_per_batch,
            "batch_count": config.batch_count,
            "seed": config.seed,
            "merge_cells": config.merge_cells,
        },
        timing_seconds=elapsed,
    )

    if config.out_dir is not None:
        with _stage("report"):
            out = Path(config.out_dir)
            out.mkdir(parents=True, exist_ok=True)
            (out / "report.json").write_text(report.to_json(), encoding="utf-8")
            _write_batch_csv(out / "samples.csv", pooled, grid_r, grid_s)
    return report


def _write_batch_csv(path: Path, batch: metrology.SampleBatch, r: int, s: int) -> None:
    lines = ["trial,raw_value,filtered,j,parity"]
    for trial, value, kept, j, parity in metrology.batch_rows(batch, r, s):
        if kept:
            lines.append(f"{trial},{value!r},1,{j},{parity}")
        else:
            lines.append(f"{trial},{value!r},0,,")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")

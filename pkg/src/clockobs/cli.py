"""Command-line front end.

Subcommands: validate, compile, orbit, spectrum, sample, decide,
phase-estimate, experiment. Exit codes: 0 success, 2 validation failure,
3 budget exhaustion, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import circuits, clock, harness, metrology, rtm
from .errors import BudgetExceededError, ClockObsError, SpecParseError, StageError

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VALIDATION = 2
EXIT_BUDGET = 3
EXIT_IO = 4


def _emit(data, out: str | None) -> None:
    text = data if isinstance(data, str) else json.dumps(data, sort_keys=True, indent=2) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _load_spec(path: str) -> rtm.RtmSpec:
    return rtm.parse_rtm_file(path)


def _cmd_validate(args) -> int:
    spec = _load_spec(args.spec)
    report = rtm.check_reversibility(spec)
    _emit(
        {
            "machine": spec.name,
            "configs_checked": report.configs_checked,
            "violations": [
                {"kind": v.kind, "message": v.message} for v in report.violations
            ],
            "boundary_wraps": [list(w) for w in report.boundary_wraps],
            "reversible": report.is_reversible,
        },
        args.out,
    )
    return EXIT_OK if report.is_reversible else EXIT_VALIDATION


def _cmd_compile(args) -> int:
    spec = _load_spec(args.spec)
    circuit = circuits.build_wrapper_circuit(spec, merge_cells=not args.no_merge_cells)
    _emit(circuits.dump_circuit_json(circuit) + "\n", args.out)
    return EXIT_OK


def _cmd_orbit(args) -> int:
    spec = _load_spec(args.spec)
    circuit = circuits.build_wrapper_circuit(spec, merge_cells=not args.no_merge_cells)
    layout = circuit.layout
    initial = layout.initial_basis_state(args.input)
    r_obs = circuits.circuit_orbit_length(circuit, initial)
    op = clock.ForwardOperator(circuit)
    orbit = clock.compute_orbit(op, clock.ClockedState(initial, 1))
    locality = clock.locality_report(op)
    _emit(
        {
            "machine": spec.name,
            "m": layout.m,
            "gate_count": circuit.s,
            "r_nominal": circuits.nominal_cycle_length(layout.m),
            "r_observed": r_obs,
            "d_observed": orbit.dimension,
            "locality": {
                "max_support": locality.max_support,
                "term_supports": list(locality.term_supports),
            },
        },
        args.out,
    )
    return EXIT_OK


def _cmd_spectrum(args) -> int:
    model = clock.spectral_model(args.d)
    lines = ["j,eigenvalue,multiplicity,probability"]
    for line in model.lines:
        lines.append(
            f"{line.index},{line.eigenvalue!r},{line.multiplicity},{line.probability}"
        )
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def _cmd_sample(args) -> int:
    spec = _load_spec(args.spec)
    circuit = circuits.build_wrapper_circuit(spec, merge_cells=not args.no_merge_cells)
    layout = circuit.layout
    r = circuits.nominal_cycle_length(layout.m)
    s = circuit.s
    op = clock.ForwardOperator(circuit)
    orbit = clock.compute_orbit(op, clock.ClockedState(layout.initial_basis_state(args.input), 1))
    model = clock.spectral_model(orbit.dimension)
    delta = 1.0 / (r * s) if args.accuracy == "auto" else float(args.accuracy)
    acc = metrology.AccuracyModel(delta=delta)
    batch = metrology.draw_batch(acc, model, args.samples, seed=args.seed, r=r, s=s)
    lines = ["trial,raw_value,filtered,j,parity"]
    for trial, value, kept, j, parity in metrology.batch_rows(batch, r, s):
        lines.append(
            f"{trial},{value!r},{int(kept)},{'' if j is None else j},{'' if parity is None else parity}"
        )
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def _cmd_decide(args) -> int:
    spec = _load_spec(args.spec)
    circuit = circuits.build_wrapper_circuit(spec, merge_cells=not args.no_merge_cells)
    layout = circuit.layout
    r = circuits.nominal_cycle_length(layout.m)
    s = circuit.s
    op = clock.ForwardOperator(circuit)
    orbit = clock.compute_orbit(op, clock.ClockedState(layout.initial_basis_state(args.input), 1))
    model = clock.spectral_model(orbit.dimension)
    delta = 1.0 / (r * s) if args.accuracy == "auto" else float(args.accuracy)
    acc = metrology.AccuracyModel(delta=delta)
    batch = metrology.draw_batch(acc, model, args.samples, seed=args.seed, r=r, s=s)
    decision = metrology.decide(batch, r, s)
    _emit(
        {
            "machine": spec.name,
            "input": args.input,
            "seed": args.seed,
            "model": {
                "delta": acc.delta,
                "success_prob": acc.success_prob,
                "failure_mode": acc.failure_mode,
            },
            "grid": {"r": r, "s": s},
            "verdict": decision.verdict,
            "odd_fraction": decision.odd_fraction,
            "filtered_count": decision.filtered_count,
            "threshold": decision.threshold,
            "confidence_bound": decision.confidence_bound,
            "inconclusive": decision.inconclusive,
        },
        args.out,
    )
    return EXIT_OK


def _parse_phi(text: str) -> float:
    if "/" in text:
        return float(Fraction(text))
    return float(text)


def _cmd_phase_estimate(args) -> int:
    setup = metrology.PhaseEstimationSetup(m=args.m, eigenphases=(_parse_phi(args.phi),))
    table = metrology.phase_estimate_distribution(setup)
    result = {
        "m": args.m,
        "phi": _parse_phi(args.phi),
        "distribution": [float(p) for p in table],
        "argmax": int(table.argmax()),
    }
    if args.samples:
        import numpy as np

        rng = np.random.default_rng(args.seed)
        counts = [0] * len(table)
        for _ in range(args.samples):
            counts[metrology.sample_phase_estimate(setup, rng)] += 1
        result["sample_counts"] = counts
        result["samples"] = args.samples
        result["seed"] = args.seed
    _emit(result, args.out)
    return EXIT_OK


def _cmd_experiment(args) -> int:
    if args.config:
        config = harness.ExperimentConfig.from_json_file(args.config)
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.out:
            overrides["out_dir"] = args.out
        if overrides:
            from dataclasses import replace

            config = replace(config, **overrides)
    else:
        config = harness.ExperimentConfig(
            spec_path=args.spec,
            input_word=args.input,
            accuracy="auto" if args.accuracy == "auto" else float(args.accuracy),
            samples_per_batch=args.samples,
            batch_count=args.batches,
            seed=args.seed if args.seed is not None else 0,
            out_dir=args.out,
            merge_cells=not args.no_merge_cells,
        )
    report = harness.run_experiment(config)
    sys.stdout.write(report.to_json())
    sys.stderr.write(f"elapsed: {report.timing_seconds:.3f}s\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clockobs",
        description="Compile reversible machines into self-looping circuits and "
        "decide their output from accuracy-limited clock-observable measurements.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_input=False):
        p.add_argument("spec", help="machine spec file (.rtm)")
        if needs_input:
            p.add_argument("--input", default="", help="input word (symbols, concatenated)")
        p.add_argument("--no-merge-cells", action="store_true", help="one wire per register")
        p.add_argument("--out", default=None, help="write output to this file")

    p = sub.add_parser("validate", help="parse and check reversibility")
    add_common(p)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("compile", help="dump the self-looping circuit as JSON")
    add_common(p)
    p.set_defaults(func=_cmd_compile)

    p = sub.add_parser("orbit", help="measure circuit and clock orbit lengths")
    add_common(p, needs_input=True)
    p.set_defaults(func=_cmd_orbit)

    p = sub.add_parser("spectrum", help="exact eigenvalue table for a d-cycle")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_spectrum)

    p = sub.add_parser("sample", help="draw accuracy-limited measurement outcomes")
    add_common(p, needs_input=True)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--accuracy", default="auto", help="float or 'auto' (=1/(r*s))")
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("decide", help="sample and run the parity decision")
    add_common(p, needs_input=True)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--accuracy", default="auto")
    p.set_defaults(func=_cmd_decide)

    p = sub.add_parser("phase-estimate", help="exact ancilla readout distribution")
    p.add_argument("--phi", required=True, help="eigenphase in [0,1), fractions allowed")
    p.add_argument("--m", type=int, required=True, help="ancilla count")
    p.add_argument("--samples", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_phase_estimate)

    p = sub.add_parser("experiment", help="full pipeline with a JSON report")
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--spec", default=None)
    p.add_argument("--input", default="")
    p.add_argument("--accuracy", default="auto")
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--batches", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--no-merge-cells", action="store_true")
    p.add_argument("--out", default=None, help="output directory")
    p.set_defaults(func=_cmd_experiment)
    return parser


def cli_dispatch(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "experiment" and not args.config and not args.spec:
        parser.error("experiment needs --config or --spec")
    try:
        return args.func(args)
    except SpecParseError as exc:
        sys.stderr.write(f"[parse] {exc}\n")
        return EXIT_VALIDATION
    except BudgetExceededError as exc:
        sys.stderr.write(f"[orbit] {exc}\n")
        return EXIT_BUDGET
    except StageError as exc:
        sys.stderr.write(f"{exc}\n")
        if isinstance(exc.cause, BudgetExceededError):
            return EXIT_BUDGET
        if isinstance(exc.cause, OSError):
            return EXIT_IO
        return EXIT_VALIDATION
    except OSError as exc:
        sys.stderr.write(f"[io] {exc}\n")
        return EXIT_IO
    except ClockObsError as exc:
        sys.stderr.write(f"[error] {exc}\n")
        return EXIT_VALIDATION


def main() -> None:
    raise SystemExit(cli_dispatch())


if __name__ == "__main__":
    main()

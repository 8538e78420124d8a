import json
import subprocess
import sys

import pytest

from clockobs import corpus
from clockobs.cli import (
    EXIT_IO,
    EXIT_OK,
    EXIT_VALIDATION,
    cli_dispatch,
)
from clockobs.errors import StageError
from clockobs.harness import ExperimentConfig, batch_seed, run_experiment


def flip_config(tmp_path, **overrides):
    defaults = dict(
        spec_path=str(corpus.path("flip")),
        input_word="0",
        accuracy="auto",
        samples_per_batch=200,
        batch_count=1,
        seed=7,
        out_dir=None,
    )
    defaults.update(overrides)
    return ExperimentConfig(**defaults)


# ---------------------------------------------------------------------------
# run_experiment


def test_experiment_halt_machine_rejecting(tmp_path):
    config = ExperimentConfig(
        spec_path=str(corpus.path("halt")), input_word="0", seed=3
    )
    report = run_experiment(config)
    assert report.f_ground_truth == 0
    assert report.decision.verdict == 0
    assert report.agreement
    assert report.d_observed == report.machine["gate_count"] * report.r_nominal


def test_experiment_flip_accepting():
    config = ExperimentConfig(spec_path=str(corpus.path("flip")), input_word="0", seed=5)
    report = run_experiment(config)
    assert report.f_ground_truth == 1
    assert report.decision.verdict == 1
    assert report.agreement
    assert report.d_observed == 2 * report.machine["gate_count"] * report.r_nominal
    assert report.locality_max_support == 4
    assert not report.accuracy_coarser_than_grid


def test_experiment_coarse_accuracy_is_flagged():
    config = ExperimentConfig(
        spec_path=str(corpus.path("flip")),
        input_word="0",
        seed=5,
        accuracy=0.25,  # far coarser than 1/(r*s)
        samples_per_batch=200,
    )
    report = run_experiment(config)
    assert report.accuracy_coarser_than_grid
    # inconclusive or disagreement are both permitted here; the run completes


def test_experiment_report_is_byte_identical_across_runs(tmp_path):
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    config1 = flip_config(tmp_path, out_dir=str(out1), batch_count=3)
    config2 = flip_config(tmp_path, out_dir=str(out2), batch_count=3)
    run_experiment(config1)
    run_experiment(config2)
    assert (out1 / "report.json").read_bytes() == (out2 / "report.json").read_bytes()
    assert (out1 / "samples.csv").read_bytes() == (out2 / "samples.csv").read_bytes()


def test_experiment_seed_changes_samples(tmp_path):
    r1 = run_experiment(flip_config(tmp_path, seed=1))
    r2 = run_experiment(flip_config(tmp_path, seed=2))
    assert r1.decision.odd_fraction != r2.decision.odd_fraction


def test_batch_seed_split_is_stable():
    assert batch_seed(9, 0) == [9, 0]
    assert batch_seed(9, 1) != batch_seed(9, 0)


def test_stage_attribution_parse(tmp_path):
    bad = tmp_path / "bad.rtm"
    bad.write_text("states: nope\n", encoding="utf-8")
    with pytest.raises(StageError) as err:
        run_experiment(flip_config(tmp_path, spec_path=str(bad)))
    assert err.value.stage == "parse"


def test_stage_attribution_validate(tmp_path):
    bad = tmp_path / "irrev.rtm"
    bad.write_text(
        "states: p:rw q:rw z:final\n"
        "alphabet: 0 1\n"
        "initial: p\n"
        "tape_cells: 1\n"
        "transition: rw (p,0) -> (z,1)\n"
        "transition: rw (q,0) -> (z,1)\n"
        "transition: rw (p,1) -> (p,1)\n"
        "transition: rw (q,1) -> (q,0)\n",
        encoding="utf-8",
    )
    with pytest.raises(StageError) as err:
        run_experiment(flip_config(tmp_path, spec_path=str(bad)))
    assert err.value.stage == "validate"


def test_stage_attribution_ground_truth_nontermination(tmp_path):
    spinner = tmp_path / "spin.rtm"
    spinner.write_text(
        "states: a:right b:right\n"
        "alphabet: 0 1\n"
        "initial: a\n"
        "tape_cells: 2\n"
        "transition: move a -> b +1\n"
        "transition: move b -> a +1\n",
        encoding="utf-8",
    )
    with pytest.raises(StageError) as err:
        run_experiment(flip_config(tmp_path, spec_path=str(spinner)))
    assert err.value.stage == "ground-truth"


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(spec_path="x", input_word="", samples_per_batch=0)
    with pytest.raises(ValueError):
        ExperimentConfig(spec_path="x", input_word="", accuracy=-1.0)
    with pytest.raises(ValueError):
        ExperimentConfig(spec_path="x", input_word="", accuracy="sometimes")


def test_config_round_trips_through_json(tmp_path):
    payload = {
        "spec_path": str(corpus.path("halt")),
        "input_word": "1",
        "accuracy": "auto",
        "samples_per_batch": 50,
        "batch_count": 2,
        "seed": 123,
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(payload), encoding="utf-8")
    config = ExperimentConfig.from_json_file(path)
    assert config.seed == 123
    assert config.batch_count == 2


# ---------------------------------------------------------------------------
# CLI


def test_cli_validate_corpus_machine(capsys):
    code = cli_dispatch(["validate", str(corpus.path("flip"))])
    assert code == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["reversible"] is True
    assert out["violations"] == []


def test_cli_validate_irreversible_machine(tmp_path, capsys):
    bad = tmp_path / "bad.rtm"
    bad.write_text(
        "states: p:rw\nalphabet: 0 1\ninitial: p\ntape_cells: 1\n"
        "transition: rw (p,0) -> (p,0)\n",
        encoding="utf-8",
    )
    code = cli_dispatch(["validate", str(bad)])
    assert code == EXIT_VALIDATION
    out = json.loads(capsys.readouterr().out)
    assert not out["reversible"]


def test_cli_validate_parse_error(tmp_path, capsys):
    bad = tmp_path / "bad.rtm"
    bad.write_text("transition: garbage\n", encoding="utf-8")
    code = cli_dispatch(["validate", str(bad)])
    assert code == EXIT_VALIDATION
    assert "[parse]" in capsys.readouterr().err


def test_cli_missing_file_is_io_error(capsys):
    code = cli_dispatch(["validate", "/nonexistent/machine.rtm"])
    assert code == EXIT_IO


def test_cli_spectrum_csv(capsys):
    code = cli_dispatch(["spectrum", "--d", "4"])
    assert code == EXIT_OK
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "j,eigenvalue,multiplicity,probability"
    rows = [line.split(",") for line in lines[1:]]
    assert [r[0] for r in rows] == ["0", "1", "2"]
    assert [float(r[1]) for r in rows] == pytest.approx([1.0, 0.0, -1.0], abs=1e-12)
    assert [int(r[2]) for r in rows] == [1, 2, 1]
    assert [r[3] for r in rows] == ["1/4", "1/2", "1/4"]


def test_cli_orbit(capsys):
    code = cli_dispatch(["orbit", str(corpus.path("flip")), "--input", "1"])
    assert code == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["r_observed"] == out["r_nominal"]  # flip("1") rejects
    assert out["d_observed"] == out["gate_count"] * out["r_observed"]


def test_cli_compile_and_replay(tmp_path):
    out = tmp_path / "circuit.json"
    code = cli_dispatch(["compile", str(corpus.path("halt")), "--out", str(out)])
    assert code == EXIT_OK
    dump = json.loads(out.read_text(encoding="utf-8"))
    assert dump["format"] == "clockobs-circuit/1"
    assert len(dump["gates"]) > 0


def test_cli_sample_csv(capsys):
    code = cli_dispatch(
        ["sample", str(corpus.path("flip")), "--input", "0", "--samples", "20", "--seed", "4"]
    )
    assert code == EXIT_OK
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "trial,raw_value,filtered,j,parity"
    assert len(lines) == 21


def test_cli_decide(capsys):
    code = cli_dispatch(
        ["decide", str(corpus.path("flip")), "--input", "0", "--samples", "400", "--seed", "4"]
    )
    assert code == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["verdict"] == 1


def test_cli_phase_estimate(capsys):
    code = cli_dispatch(["phase-estimate", "--phi", "1/4", "--m", "2"])
    assert code == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["argmax"] == 1
    assert out["distribution"][1] == pytest.approx(1.0, abs=1e-12)


def test_cli_experiment_deterministic_stdout(tmp_path, capsys):
    args = [
        "experiment",
        "--spec",
        str(corpus.path("halt")),
        "--input",
        "1",
        "--samples",
        "100",
        "--seed",
        "7",
    ]
    assert cli_dispatch(args) == EXIT_OK
    first = capsys.readouterr().out
    assert cli_dispatch(args) == EXIT_OK
    second = capsys.readouterr().out
    assert first == second
    report = json.loads(first)
    assert report["agreement"] is True
    assert "timing" not in json.dumps(report)


def test_cli_experiment_config_file(tmp_path, capsys):
    cfg = {
        "spec_path": str(corpus.path("flip")),
        "input_word": "1",
        "samples_per_batch": 150,
        "batch_count": 2,
        "seed": 11,
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg), encoding="utf-8")
    code = cli_dispatch(["experiment", "--config", str(path)])
    assert code == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["f_ground_truth"] == 0
    assert report["decision"]["verdict"] == 0


def test_cli_unknown_subcommand_fails():
    with pytest.raises(SystemExit) as err:
        cli_dispatch(["frobnicate"])
    assert err.value.code != 0


def test_cli_entrypoint_runs_as_module():
    proc = subprocess.run(
        [sys.executable, "-m", "clockobs.cli", "spectrum", "--d", "2"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == EXIT_OK
    assert proc.stdout.startswith("j,eigenvalue")

import json
import os

import numpy as np
import pytest

import main
from controllers.app_controller import ExperimentController
from services.csv_emitter import emit_csv, read_csv
from services.experiment_file_handler import ExperimentFileHandler
from services.experiment_runner import (
    EXIT_CONFIG_ERROR, EXIT_OK, EXIT_PARTIAL_FAILURE, RESOLVED_FILE, RUNS_FILE, SUMMARY_FILE, TABLE_FILE,
    TIMINGS_FILE, derive_seed, run_experiment,
)
from utils.errors import ConfigError
from utils.formatters import Formatters

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def _toy_document(**overrides):
    doc = {
        "name": "toy_check",
        "problem": {"kind": "toy"},
        "methods": [
            {"method": "sgd_euler", "label": "SGD"},
            {"method": "sgpc", "label": "MJP", "index": {"kind": "jump_uniform", "rate": 1.0}},
        ],
        "runs": 3,
        "steps": 20,
        "step": 0.1,
        "master_seed": 5,
        "theta0": 0.0,
        "record_every": 5,
    }
    doc.update(overrides)
    return doc


def _poly_document(**overrides):
    doc = {
        "name": "poly_check",
        "problem": {"kind": "poly_regression", "noise": {"modes": 10}},
        "methods": [
            {"method": "sgd_midpoint", "label": "SGD implicit"},
            {"method": "sgpc", "label": "RBM", "index": {"kind": "reflected_brownian", "sigma": 0.5}},
        ],
        "runs": 2,
        "steps": 20,
        "step": 0.1,
        "index_substep": 0.01,
        "master_seed": 1,
        "theta0": 0.5,
        "index_init": 0.0,
        "record_every": 10,
        "eval_points": 50,
        "write_trajectories": True,
    }
    doc.update(overrides)
    return doc


def _parse(doc, output_dir):
    return ExperimentFileHandler.parse_experiment(doc, output_dir=str(output_dir))


def _files(directory):
    out = {}
    for base, _, names in os.walk(directory):
        for name in names:
            path = os.path.join(base, name)
            with open(path, "rb") as f:
                out[os.path.relpath(path, directory)] = f.read()
    return out


# ============================================================================
# CSV EMISSION
# ============================================================================

def test_emit_csv_writes_a_header_and_one_line_per_record(tmp_path):
    records = [{"a": 1, "b": 0.1}, {"a": 2, "b": 1.0 / 3.0}, {"a": 3, "b": -2.5e-300}]
    path = emit_csv(records, str(tmp_path / "out" / "records.csv"), ["b", "a"])
    with open(path, "rb") as f:
        content = f.read()
    assert b"\r" not in content
    lines = content.decode("utf-8").splitlines()
    assert len(lines) == 4 and lines[0] == "b,a"
    assert lines[2] == "0.33333333333333331,2"


def test_emit_csv_round_trips_floats_exactly(tmp_path, rng):
    values = rng.standard_normal(50) * 10.0 ** rng.integers(-20, 20, 50)
    path = emit_csv([{"v": v} for v in values], str(tmp_path / "values.csv"))
    np.testing.assert_array_equal(read_csv(path)["v"].to_numpy(), values)


def test_emit_csv_with_no_records_writes_the_header_only(tmp_path):
    path = emit_csv([], str(tmp_path / "empty.csv"), ["config_id", "mean"])
    with open(path, encoding="utf-8") as f:
        assert f.read() == "config_id,mean\n"


def test_emit_csv_names_the_path_on_failure(tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("not a directory")
    target = str(blocker / "records.csv")
    with pytest.raises(OSError) as info:
        emit_csv([{"a": 1}], target)
    assert target in str(info.value)


# ============================================================================
# CONFIG PARSING
# ============================================================================

def test_steps_resolve_to_a_horizon(tmp_path):
    config = _parse(_toy_document(), tmp_path)
    assert config.horizon == pytest.approx(2.0)
    assert [m.method_id for m in config.methods] == ["SGD", "MJP"]
    assert config.output_dir == str(tmp_path)


def test_regression_noise_seed_defaults_to_the_master_seed(tmp_path):
    config = _parse(_poly_document(master_seed=17), tmp_path)
    assert config.problem["noise"]["seed"] == 17


def test_shipped_configs_load(tmp_path):
    for name in ("table1_polyreg.json", "toy_sgpc.json"):
        config = ExperimentFileHandler.load_experiment(os.path.join(ROOT, "config", "experiments", name),
                                                       output_dir=str(tmp_path))
        assert config.runs >= 1
    table = ExperimentFileHandler.load_experiment(os.path.join(ROOT, "config", "experiments", "table1_polyreg.json"))
    assert len(table.methods) == 9 and table.horizon == pytest.approx(5000.0)


@pytest.mark.parametrize("change", [
    {"learning_rate": 0.1},
    {"steps": 20, "horizon": 3.0},
    {"runs": 0},
    {"step": -0.1},
    {"master_seed": -1},
    {"schema_version": 2},
    {"methods": []},
    {"methods": [{"method": "adam"}]},
    {"methods": [{"method": "sgpc", "label": "A", "index": {"kind": "jump_uniform", "rate": 1.0}, "sigma": 1.0}]},
    {"methods": [{"method": "sgpc", "label": "A"}]},
    {"methods": [{"method": "sgpc", "label": "A", "index": {"kind": "countable_jump"}}]},
    {"methods": [{"method": "sgpd", "label": "A", "index": {"kind": "jump_uniform", "rate": 1.0}}]},
    {"methods": [{"method": "sgd_euler", "label": "A"}, {"method": "sgd_midpoint", "label": "A"}]},
    {"index_substep": 0.03},
    {"problem": {"kind": "toy", "alpha": 1.0}},
])
def test_bad_documents_are_config_errors(tmp_path, change):
    doc = _toy_document()
    doc.update(change)
    with pytest.raises(ConfigError):
        _parse(doc, tmp_path)


def test_output_dir_precedence(monkeypatch):
    monkeypatch.setenv("SGP_OUTPUT_DIR", "from_env")
    assert ExperimentFileHandler.resolve_output_dir("from_cli", "from_config") == "from_cli"
    assert ExperimentFileHandler.resolve_output_dir(None, "from_config") == "from_env"
    monkeypatch.delenv("SGP_OUTPUT_DIR")
    assert ExperimentFileHandler.resolve_output_dir(None, "from_config") == "from_config"


# ============================================================================
# SEEDS
# ============================================================================

def test_seeds_follow_the_method_label():
    seeds = [derive_seed(1, "SGD", j) for j in range(5)]
    assert seeds == [derive_seed(1, "SGD", j) for j in range(5)]
    assert len(set(seeds)) == 5
    assert seeds != [derive_seed(1, "SGD implicit", j) for j in range(5)]
    assert seeds != [derive_seed(2, "SGD", j) for j in range(5)]
    assert all(0 <= s < 2 ** 63 for s in seeds)


def test_seeds_survive_reordering_the_methods(tmp_path):
    doc = _toy_document(runs=2)
    forward = run_experiment(_parse(doc, tmp_path / "a"))
    doc["methods"] = doc["methods"][::-1]
    backward = run_experiment(_parse(doc, tmp_path / "b"))
    seeds = {o.method_id: [r.seed for r in o.results] for o in forward.outcomes}
    assert seeds == {o.method_id: [r.seed for r in o.results] for o in backward.outcomes}
    terminal = {o.method_id: o.ok_thetas.tolist() for o in forward.outcomes}
    assert terminal == {o.method_id: o.ok_thetas.tolist() for o in backward.outcomes}


# ============================================================================
# RUN MATRIX
# ============================================================================

def test_single_frozen_run_summary(tmp_path):
    doc = _toy_document(runs=1, index_init=0.5, methods=[
        {"method": "sgpc", "label": "frozen", "index": {"kind": "jump_uniform", "rate": 0.0}},
    ])
    report = run_experiment(_parse(doc, tmp_path))
    outcome = report.outcomes[0]
    assert report.exit_code == EXIT_OK
    assert outcome.summary.std is None
    assert outcome.summary.terminal_mean == outcome.results[0].terminal_metric

    table = read_csv(str(tmp_path / TABLE_FILE))
    assert np.isnan(table.loc[0, "std"])
    assert table.loc[0, "mean"] == outcome.results[0].terminal_metric


def test_outputs_are_byte_identical_across_reruns(tmp_path):
    first = run_experiment(_parse(_poly_document(), tmp_path / "first"))
    second = run_experiment(_parse(_poly_document(), tmp_path / "second"), workers=2)
    assert first.exit_code == second.exit_code == EXIT_OK

    a, b = _files(tmp_path / "first"), _files(tmp_path / "second")
    assert set(a) == set(b)
    for name in set(a) - {TIMINGS_FILE}:
        assert a[name] == b[name], name
    assert {RUNS_FILE, SUMMARY_FILE, TABLE_FILE, RESOLVED_FILE, "abs_err.csv", "fitted.csv", "data_g.csv"} <= set(a)
    assert sum(name.startswith("trajectories") for name in a) == 4


def test_summary_mean_matches_the_runs_file(tmp_path):
    run_experiment(_parse(_toy_document(runs=7), tmp_path))
    runs = read_csv(str(tmp_path / RUNS_FILE))
    summary = read_csv(str(tmp_path / SUMMARY_FILE))
    assert list(runs.columns) == ["config_id", "run", "seed", "status", "metric", "terminal_metric",
                                  "theta_1", "error"]
    assert list(summary.columns) == ["metric", "config_id", "time", "mean", "std"]
    for config_id, group in runs.groupby("config_id"):
        rows = summary[summary["config_id"] == config_id]
        terminal = rows[rows["time"] == rows["time"].max()]
        assert terminal["mean"].iloc[0] == np.mean(group["terminal_metric"].to_numpy())
        assert len(rows) == 5


def test_failing_runs_are_isolated(tmp_path):
    doc = _toy_document(runs=2, steps=1200, step=3.0, record_every=100, methods=[
        {"method": "sgd_euler", "label": "diverging"},
        {"method": "sgpc", "label": "stable", "index": {"kind": "jump_uniform", "rate": 1.0}, "epsilon": 0.1},
    ])
    doc["methods"][1]["integrator"] = {"kind": "implicit_midpoint"}
    report = run_experiment(_parse(doc, tmp_path))
    assert report.exit_code == EXIT_PARTIAL_FAILURE
    diverging, stable = report.outcomes
    assert diverging.failures == 2 and diverging.summary is None
    assert stable.failures == 0

    runs = read_csv(str(tmp_path / RUNS_FILE))
    assert list(runs.loc[runs["config_id"] == "diverging", "status"]) == ["failed", "failed"]


# ============================================================================
# COMMAND LINE
# ============================================================================

def test_controller_exit_codes(tmp_path):
    lines = []
    controller = ExperimentController(out=lines.append)

    assert controller.handle_run(str(tmp_path / "missing.json")) == EXIT_CONFIG_ERROR
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(_toy_document(unknown_key=1)))
    assert controller.handle_run(str(bad)) == EXIT_CONFIG_ERROR

    good = tmp_path / "good.json"
    good.write_text(json.dumps(_toy_document()))
    assert controller.handle_run(str(good), str(tmp_path / "out")) == EXIT_OK
    assert any("Mean rel. error" in line for line in lines)


def test_main_run_and_plot(tmp_path):
    config = tmp_path / "toy.json"
    config.write_text(json.dumps(_toy_document()))
    out = tmp_path / "results"
    assert main.main(["run", str(config), "--output-dir", str(out), "--workers", "1"]) == EXIT_OK
    assert main.main(["plot", str(out / SUMMARY_FILE)]) == EXIT_OK
    assert (out / "summary.svg").exists()
    assert main.main(["plot", str(out / TIMINGS_FILE)]) == EXIT_CONFIG_ERROR


def test_main_beta_eval(capsys):
    assert main.main(["beta-eval", "0", "1.25", "--etas", "1", "0.5", "0.25"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert "t,beta,learning_rate" in lines
    assert "1.25,1.5,0.5" in lines

    assert main.main(["beta-eval", "2", "--family", "affine", "--params", '{"a": 1, "b": 1}', "--step", "0.1"]) == 0
    row = [line for line in capsys.readouterr().out.splitlines() if line.startswith("2,")][0]
    t, beta, rate = (float(v) for v in row.split(","))
    assert beta == pytest.approx(4.0, rel=1e-12)
    assert rate == pytest.approx(1.0 / 3.0, rel=1e-15)

    assert main.main(["beta-eval", "1", "--params", "{bad"]) == EXIT_CONFIG_ERROR
    assert main.main(["beta-eval", "5", "--etas", "1", "1"]) == EXIT_CONFIG_ERROR


def test_scientific_table_format():
    assert Formatters.format_scientific(0.01844) == "1.844·10⁻²"
    assert Formatters.format_scientific(0.3178) == "3.178·10⁻¹"
    assert Formatters.format_scientific(float("nan")) == "-"
    assert Formatters.format_scientific(9.99999e-3) == "1.000·10⁻²"


# ============================================================================
# TABLE 1
# ============================================================================

@pytest.mark.slow
def test_table1_ordering(tmp_path):
    path = os.path.join(ROOT, "config", "experiments", "table1_polyreg.json")
    report = run_experiment(ExperimentFileHandler.load_experiment(path, output_dir=str(tmp_path)),
                            workers=os.cpu_count() or 1)
    assert report.exit_code == EXIT_OK
    mean = {o.method_id: o.summary.terminal_mean for o in report.outcomes}
    std = {o.method_id: o.summary.terminal_std for o in report.outcomes}

    for sigma in ("5", "0.5"):
        assert mean[f"SGPC RBM sigma={sigma}"] < mean["SGD"]
    assert mean["SGD"] < mean["SGPC MJP lambda=10"]
    assert mean["SGPC MJP lambda=10"] < min(mean["SGPC MJP lambda=1"], mean["SGPC MJP lambda=0.1"])
    assert max(mean["SGPC MJP lambda=1"], mean["SGPC MJP lambda=0.1"]) < mean["SGPC MJP lambda=0.01"]

    assert 0.8 * 1.586e-2 <= mean["SGPC RBM sigma=5"] <= 2 * 1.586e-2
    assert 0.8 * 1.587e-2 <= mean["SGPC RBM sigma=0.5"] <= 2 * 1.587e-2
    assert 0.5 * 1.844e-2 <= mean["SGD"] <= 2 * 1.844e-2

    assert mean["SGPC MJP lambda=0.01"] > 1e-1
    assert std["SGPC MJP lambda=0.01"] == max(std.values())

"""
Run-matrix execution: seeding, per-run failure isolation, ensemble summaries and
the CSV artifacts of an experiment.

Seed of run j of a method: the first 8 bytes of sha256(label) form a digest d and
numpy's SeedSequence([master_seed, d, j]) generates two 32-bit words, joined and
masked to 63 bits. The rule depends on the method label, never on block order.
"""
import hashlib
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from models.constants import ProblemKind
from models.experiment import ExperimentConfig, MethodOutcome, RunResult
from models.problem import problem_spec_from_dict
from models.run import Trajectory
from services.csv_emitter import emit_csv
from services.diagnostics import Diagnostics, evaluation_grid
from services.experiment_file_handler import ExperimentFileHandler
from services.method_registry import MethodRegistry
from services.problems import build_problem
from utils.formatters import Formatters

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG_ERROR = 1
EXIT_PARTIAL_FAILURE = 2

RUNS_FILE = "runs.csv"
TIMINGS_FILE = "timings.csv"
SUMMARY_FILE = "summary.csv"
TABLE_FILE = "table1.csv"
ABS_ERR_FILE = "abs_err.csv"
FITTED_FILE = "fitted.csv"
DATA_FILE = "data_g.csv"
RESOLVED_FILE = "resolved_config.json"
TRAJECTORY_DIR = "trajectories"


def derive_seed(master_seed: int, method_id: str, run: int) -> int:
    digest = int.from_bytes(hashlib.sha256(method_id.encode("utf-8")).digest()[:8], "big")
    words = np.random.SeedSequence([int(master_seed), digest, int(run)]).generate_state(2, dtype=np.uint32)
    return ((int(words[0]) << 32) | int(words[1])) & ((1 << 63) - 1)


@dataclass
class ExperimentReport:
    outcomes: List[MethodOutcome]
    output_dir: str
    table: str
    exit_code: int

    @property
    def failures(self) -> int:
        return sum(o.failures for o in self.outcomes)


# ============================================================================
# ONE METHOD BLOCK (runs inside a worker)
# ============================================================================

def _failed(method_id: str, seed: int, dimension: int, runtime: float, error: str) -> RunResult:
    return RunResult(method_id=method_id, seed=seed, terminal_metric=float("nan"),
                     terminal_theta=np.full(dimension, np.nan), runtime=runtime, status="failed", error=error)


def run_method_block(experiment: ExperimentConfig, position: int) -> MethodOutcome:
    """Run all seeds of one method block.

    The ensemble is integrated in one batch; if the batch fails, each seed is rerun
    on its own so a single diverging run does not take the others down.
    """
    registry = MethodRegistry()
    block = experiment.methods[position]
    problem = build_problem(problem_spec_from_dict(experiment.problem))
    config = registry.build_config(block, experiment, problem)
    metric = Diagnostics.metric_name(problem)
    seeds = [derive_seed(experiment.master_seed, block.method_id, j) for j in range(experiment.runs)]
    K = problem.dimension

    logger.info(f"Method '{block.method_id}' ({block.method.key}): {len(seeds)} runs")
    trajectories: Dict[int, Optional[Trajectory]] = {}
    runtimes: Dict[int, float] = {}
    errors: Dict[int, str] = {}

    start = time.perf_counter()
    try:
        batch = registry.execute(block, config, seeds)
        per_run = (time.perf_counter() - start) / len(seeds)
        for j, traj in enumerate(batch):
            trajectories[j], runtimes[j] = traj, per_run
    except Exception as e:
        logger.warning(f"Batch of '{block.method_id}' failed ({e}); rerunning seeds one at a time")
        for j, seed in enumerate(seeds):
            start = time.perf_counter()
            try:
                trajectories[j] = registry.execute(block, config, [seed])[0]
            except Exception as run_error:
                logger.error(f"Run {j} of '{block.method_id}' (seed {seed}) failed: {run_error}")
                trajectories[j], errors[j] = None, str(run_error)
            runtimes[j] = time.perf_counter() - start

    results: List[RunResult] = []
    series: Dict[int, np.ndarray] = {}
    for j, seed in enumerate(seeds):
        traj = trajectories[j]
        if traj is None:
            results.append(_failed(block.method_id, seed, K, runtimes[j], errors[j]))
            continue
        values = Diagnostics.metric_series(traj, problem, experiment.eval_points)
        if not np.all(np.isfinite(values)) or not np.all(np.isfinite(traj.terminal)):
            logger.error(f"Run {j} of '{block.method_id}' (seed {seed}) produced non-finite values")
            results.append(_failed(block.method_id, seed, K, runtimes[j], "non-finite metric"))
            continue
        series[j] = values
        results.append(RunResult(method_id=block.method_id, seed=seed, terminal_metric=float(values[-1]),
                                 terminal_theta=traj.terminal.copy(), runtime=runtimes[j]))

    summary = None
    if series:
        times = next(trajectories[j] for j in series).times
        summary = Diagnostics.ensemble_stats([series[j] for j in sorted(series)], times, metric)

    kept = {j: trajectories[j] for j in series} if experiment.write_trajectories else {}
    return MethodOutcome(
        method_id=block.method_id,
        position=position,
        method=block.method,
        parameters=registry.get_method(block.method.key).parameter_text(block, experiment),
        metric=metric,
        results=results,
        summary=summary,
        trajectories=kept,
        metric_series={j: series[j] for j in kept},
    )


# ============================================================================
# WHOLE EXPERIMENT
# ============================================================================

def execute_matrix(experiment: ExperimentConfig, workers: int = 1) -> List[MethodOutcome]:
    """Outcomes in config order, whatever the worker count."""
    positions = list(range(len(experiment.methods)))
    if workers <= 1 or len(positions) == 1:
        return [run_method_block(experiment, p) for p in positions]
    with ProcessPoolExecutor(max_workers=min(workers, len(positions))) as pool:
        return list(pool.map(run_method_block, [experiment] * len(positions), positions))


def run_experiment(experiment: ExperimentConfig, workers: int = 1) -> ExperimentReport:
    """Execute every (method, seed) pair and write the experiment's artifacts."""
    logger.info(f"Running experiment '{experiment.name}' with {workers} worker(s)")
    outcomes = execute_matrix(experiment, workers)

    os.makedirs(experiment.output_dir, exist_ok=True)
    problem = build_problem(problem_spec_from_dict(experiment.problem))
    write_outputs(experiment, outcomes, problem)
    ExperimentFileHandler.save_experiment(experiment, os.path.join(experiment.output_dir, RESOLVED_FILE))

    table = Formatters.format_table(Formatters.format_summary_rows(table_rows(outcomes)))
    failures = sum(o.failures for o in outcomes)
    exit_code = EXIT_PARTIAL_FAILURE if failures else EXIT_OK
    if failures:
        logger.error(f"{failures} run(s) failed; see {RUNS_FILE}")
    logger.info(f"Experiment '{experiment.name}' finished; outputs in {experiment.output_dir}")
    return ExperimentReport(outcomes=outcomes, output_dir=experiment.output_dir, table=table, exit_code=exit_code)


def table_rows(outcomes: List[MethodOutcome]) -> List[dict]:
    rows = []
    for o in outcomes:
        rows.append({
            "config_id": o.method_id,
            "method": o.method.label,
            "parameters": o.parameters,
            "metric": o.metric,
            "runs": len(o.results),
            "ok_runs": len(o.results) - o.failures,
            "mean": o.summary.terminal_mean if o.summary else float("nan"),
            "std": o.summary.terminal_std if o.summary and o.summary.terminal_std is not None else float("nan"),
        })
    return rows


def write_outputs(experiment: ExperimentConfig, outcomes: List[MethodOutcome], problem) -> None:
    out = experiment.output_dir
    K = problem.dimension
    theta_cols = [f"theta_{k + 1}" for k in range(K)]

    runs, timings, summary = [], [], []
    for o in outcomes:
        for j, r in enumerate(o.results):
            row = {"config_id": o.method_id, "run": j, "seed": r.seed, "status": r.status,
                   "metric": o.metric, "terminal_metric": r.terminal_metric}
            row.update(zip(theta_cols, r.terminal_theta))
            row["error"] = r.error
            runs.append(row)
            timings.append({"config_id": o.method_id, "run": j, "seed": r.seed, "runtime": r.runtime})
        if o.summary is not None:
            std = o.summary.std if o.summary.std is not None else np.full(len(o.summary.times), np.nan)
            for t, m, s in zip(o.summary.times, o.summary.mean, std):
                summary.append({"metric": o.metric, "config_id": o.method_id, "time": t, "mean": m, "std": s})

    emit_csv(runs, os.path.join(out, RUNS_FILE),
             ["config_id", "run", "seed", "status", "metric", "terminal_metric", *theta_cols, "error"])
    emit_csv(timings, os.path.join(out, TIMINGS_FILE), ["config_id", "run", "seed", "runtime"])
    emit_csv(summary, os.path.join(out, SUMMARY_FILE), ["metric", "config_id", "time", "mean", "std"])
    emit_csv(table_rows(outcomes), os.path.join(out, TABLE_FILE),
             ["config_id", "method", "parameters", "metric", "runs", "ok_runs", "mean", "std"])

    if problem.kind is ProblemKind.POLY_REGRESSION:
        _write_profiles(experiment, outcomes, problem)

    if experiment.write_trajectories:
        for o in outcomes:
            for j, traj in o.trajectories.items():
                frame = traj.to_frame()
                frame[o.metric] = o.metric_series[j]
                name = f"{o.position:02d}_{Formatters.slug(o.method_id)}_run{j:03d}.csv"
                emit_csv(frame, os.path.join(out, TRAJECTORY_DIR, name))


def _write_profiles(experiment: ExperimentConfig, outcomes: List[MethodOutcome], problem) -> None:
    """abs_err and fitted-curve profiles of the terminal parameters on the evaluation grid."""
    x = evaluation_grid(experiment.eval_points)
    truth = problem.truth(x)
    abs_rows, fit_rows = [], []
    for o in outcomes:
        thetas = o.ok_thetas
        if len(thetas) == 0:
            continue
        fits = np.ascontiguousarray(problem.fitted(thetas, x).T)
        errors = np.abs(truth - fits)
        spread = len(thetas) >= 2
        abs_rows.append(pd.DataFrame({
            "config_id": o.method_id, "x": x, "mean": errors.mean(axis=0),
            "std": errors.std(axis=0, ddof=1) if spread else np.nan,
        }))
        fit_rows.append(pd.DataFrame({
            "config_id": o.method_id, "x": x, "truth": truth, "mean": fits.mean(axis=0),
            "std": fits.std(axis=0, ddof=1) if spread else np.nan,
        }))

    columns_abs = ["config_id", "x", "mean", "std"]
    columns_fit = ["config_id", "x", "truth", "mean", "std"]
    emit_csv(pd.concat(abs_rows, ignore_index=True) if abs_rows else [], os.path.join(experiment.output_dir, ABS_ERR_FILE), columns_abs)
    emit_csv(pd.concat(fit_rows, ignore_index=True) if fit_rows else [], os.path.join(experiment.output_dir, FITTED_FILE), columns_fit)
    emit_csv(problem.data_frame(experiment.eval_points), os.path.join(experiment.output_dir, DATA_FILE))

"""
Experiment matrix records: method blocks, run results and ensemble summaries.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from models.constants import MethodKind


@dataclass
class EnsembleSummary:
    """Per-time mean and sample StD (J - 1 denominator) of a scalar metric over J runs."""
    metric: str
    times: np.ndarray
    mean: np.ndarray
    std: Optional[np.ndarray]
    n_runs: int

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.mean = np.asarray(self.mean, dtype=float)
        if self.std is not None:
            self.std = np.asarray(self.std, dtype=float)
            if np.any(self.std < 0):
                raise ValueError("Standard deviations must be >= 0")
        if self.n_runs < 2 and self.std is not None:
            raise ValueError("A standard deviation needs at least two runs")

    @property
    def terminal_mean(self) -> float:
        return float(self.mean[-1])

    @property
    def terminal_std(self) -> Optional[float]:
        return None if self.std is None else float(self.std[-1])


@dataclass
class MethodBlock:
    """One row of the run matrix; params holds the method-specific keys of the config block."""
    method: MethodKind
    label: str
    params: Dict[str, Any] = field(default_factory=dict)

    @property
    def method_id(self) -> str:
        """Identity used for seed derivation and output file names."""
        return self.label


@dataclass
class ExperimentConfig:
    """Parsed experiment document.

    problem and methods stay as validated plain blocks; the runner builds the
    numerical objects inside each worker.
    """
    name: str
    problem: Dict[str, Any]
    methods: List[MethodBlock]
    runs: int
    horizon: float
    step: float
    master_seed: int
    output_dir: str
    record_every: int = 1
    theta0: Any = 0.0
    index_init: Any = "stationary"
    index_substep: Optional[float] = None
    batch_size: int = 1
    eval_points: int = 1000
    write_trajectories: bool = False
    schema_version: int = 1

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError(f"Need at least one run per method, got {self.runs}")
        if not self.methods:
            raise ValueError("Experiment has no method blocks")
        ids = [m.method_id for m in self.methods]
        if len(set(ids)) != len(ids):
            raise ValueError(f"Method labels must be unique, got {ids}")


@dataclass
class RunResult:
    """Outcome of one (method, seed) run."""
    method_id: str
    seed: int
    terminal_metric: float
    terminal_theta: np.ndarray
    runtime: float
    status: str = "ok"
    error: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "ok"


@dataclass
class MethodOutcome:
    """Everything one method block produced; trajectories are kept only when requested."""
    method_id: str
    position: int
    method: MethodKind
    parameters: str
    metric: str
    results: List[RunResult]
    summary: Optional[EnsembleSummary]
    trajectories: Dict[int, Any] = field(default_factory=dict)
    metric_series: Dict[int, np.ndarray] = field(default_factory=dict)

    @property
    def failures(self) -> int:
        return sum(not r.ok for r in self.results)

    @property
    def ok_thetas(self) -> np.ndarray:
        return np.array([r.terminal_theta for r in self.results if r.ok])

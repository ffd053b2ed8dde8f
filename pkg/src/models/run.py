"""
Run configuration and trajectory records of the coupled gradient flow.
"""
import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence, Union

import numpy as np
import pandas as pd

from config.settings import FIXED_POINT_MAX_ITER, FIXED_POINT_TOL, INDEX_SUBSTEPS_PER_STEP
from models.constants import IntegratorKind, MidpointSolver
from models.index_process import STATIONARY, IndexProcessSpec, IndexValue, ProductSpec, index_spec_to_dict
from models.problem import problem_spec_to_dict
from utils.errors import DomainError


@dataclass(frozen=True)
class IntegratorSpec:
    """Gradient-flow integrator; the midpoint fields only matter for implicit_midpoint."""
    kind: IntegratorKind = IntegratorKind.EXPLICIT_EULER
    tol: float = FIXED_POINT_TOL
    max_iter: int = FIXED_POINT_MAX_ITER
    solver: MidpointSolver = MidpointSolver.AUTO

    def __post_init__(self):
        if not self.tol > 0:
            raise DomainError(f"Fixed-point tolerance must be > 0, got {self.tol}")
        if self.max_iter < 1:
            raise DomainError(f"Need at least one fixed-point iteration, got {self.max_iter}")

    @classmethod
    def euler(cls) -> "IntegratorSpec":
        return cls(IntegratorKind.EXPLICIT_EULER)

    @classmethod
    def midpoint(cls, solver: MidpointSolver = MidpointSolver.AUTO, **kwargs) -> "IntegratorSpec":
        return cls(IntegratorKind.IMPLICIT_MIDPOINT, solver=solver, **kwargs)

    def to_dict(self) -> Dict[str, Any]:
        if self.kind is IntegratorKind.EXPLICIT_EULER:
            return {"kind": self.kind.key}
        return {"kind": self.kind.key, "tol": self.tol, "max_iter": self.max_iter, "solver": self.solver.key}


@dataclass
class RunConfig:
    """Everything one stochastic gradient run needs except its seed-derived randomness.

    problem is a services.problems.Problem and dilation a services.schedules.TimeDilation.
    index_substep is optimiser time between index samples; it must divide step.
    """
    problem: Any
    index: IndexProcessSpec
    dilation: Any
    integrator: IntegratorSpec = field(default_factory=IntegratorSpec)
    horizon: float = 1.0
    step: float = 0.1
    index_substep: Optional[float] = None
    batch_size: int = 1
    theta0: Union[float, Sequence[float]] = 0.0
    index_init: Union[IndexValue, str] = STATIONARY
    seed: int = 0
    record_every: int = 1

    def __post_init__(self):
        if not (np.isfinite(self.step) and self.step > 0):
            raise DomainError(f"Step h must be > 0, got {self.step}")
        if not (np.isfinite(self.horizon) and self.horizon >= self.step):
            raise DomainError(f"Need 0 < h <= T, got h={self.step}, T={self.horizon}")
        if self.index_substep is None:
            self.index_substep = self.step / INDEX_SUBSTEPS_PER_STEP
        if not (self.index_substep > 0 and self.index_substep <= self.step * (1 + 1e-12)):
            raise DomainError(f"Index substep must lie in (0, h], got {self.index_substep}")
        if abs(self.step / self.index_substep - self.substeps_per_step) > 1e-9 * self.substeps_per_step:
            raise DomainError(f"h={self.step} is not a multiple of the index substep {self.index_substep}")
        if abs(self.horizon / self.step - self.n_steps) > 1e-9 * self.n_steps:
            raise DomainError(f"T={self.horizon} is not a multiple of h={self.step}")
        if int(self.batch_size) != self.batch_size or self.batch_size < 1:
            raise DomainError(f"Mini-batch size must be >= 1, got {self.batch_size}")
        if isinstance(self.index, ProductSpec):
            raise DomainError("Pass a scalar index process; mini-batches are built with batch_size")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise DomainError(f"record_every must be a positive integer, got {self.record_every}")
        if isinstance(self.index_init, str):
            if self.index_init != STATIONARY:
                raise DomainError(f"Initial index must be a value or '{STATIONARY}', got '{self.index_init}'")
        elif not self.index.contains(self.index_init):
            raise DomainError(f"Initial index {self.index_init} incompatible with {self.index.kind.key}")
        self.theta0 = self.initial_theta()

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.step))

    @property
    def substeps_per_step(self) -> int:
        return int(round(self.step / self.index_substep))

    def initial_theta(self) -> np.ndarray:
        K = self.problem.dimension
        theta = np.asarray(self.theta0, dtype=float)
        if theta.ndim == 0:
            theta = np.full(K, float(theta))
        if theta.shape != (K,) or not np.all(np.isfinite(theta)):
            raise DomainError(f"theta0 must be a finite vector of dimension {K}, got {self.theta0}")
        return theta

    def describe(self) -> Dict[str, Any]:
        """Seed-free description used for hashing and logs."""
        init = self.index_init if isinstance(self.index_init, str) else float(self.index_init)
        return {
            "problem": problem_spec_to_dict(self.problem.spec),
            "index": index_spec_to_dict(self.index),
            "dilation": self.dilation.to_dict(),
            "integrator": self.integrator.to_dict(),
            "horizon": self.horizon,
            "step": self.step,
            "index_substep": self.index_substep,
            "batch_size": self.batch_size,
            "theta0": self.initial_theta().tolist(),
            "index_init": init,
            "record_every": self.record_every,
        }

    @property
    def config_hash(self) -> str:
        payload = json.dumps(self.describe(), sort_keys=True, default=str)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


@dataclass
class Trajectory:
    """Recorded parameter path of one run."""
    times: np.ndarray
    states: np.ndarray
    seed: Optional[int] = None
    config_hash: str = ""

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.atleast_2d(np.asarray(self.states, dtype=float))
        if len(self.times) != len(self.states):
            raise DomainError(f"{len(self.times)} times but {len(self.states)} states")
        if len(self.times) == 0 or self.times[0] != 0.0 or np.any(np.diff(self.times) <= 0):
            raise DomainError("Trajectory times must start at 0 and increase")

    @property
    def terminal(self) -> np.ndarray:
        return self.states[-1]

    @property
    def dimension(self) -> int:
        return self.states.shape[1]

    def to_frame(self) -> pd.DataFrame:
        """Columns t, theta_1..theta_K."""
        data = {"t": self.times}
        for k in range(self.dimension):
            data[f"theta_{k + 1}"] = self.states[:, k]
        return pd.DataFrame(data)

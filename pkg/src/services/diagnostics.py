"""
Error metrics, distributional diagnostics and ensemble statistics.
"""
import logging
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy import stats

from config.settings import EVAL_POINTS
from models.constants import INDEX_HI, INDEX_LO, ProblemKind
from models.experiment import EnsembleSummary
from models.run import Trajectory
from services.problems import legendre_basis, truth_function
from utils.errors import DomainError

logger = logging.getLogger(__name__)

Truth = Union[str, Callable[[np.ndarray], np.ndarray]]


def _truth(truth: Truth) -> Callable[[np.ndarray], np.ndarray]:
    return truth_function(truth) if isinstance(truth, str) else truth


def evaluation_grid(points: int = EVAL_POINTS) -> np.ndarray:
    """points equispaced nodes of [-1, 1], endpoints included."""
    if points < 1:
        raise DomainError(f"Need at least one evaluation point, got {points}")
    return np.linspace(INDEX_LO, INDEX_HI, points)


class Diagnostics:
    """Stateless metrics over parameter vectors, samples and trajectories."""

    @staticmethod
    def rel_err(theta, truth: Truth, grid: Union[int, Sequence[float]] = EVAL_POINTS):
        """sum_l (Theta(x_l) - <theta, l(x_l)>)^2 / sum_l Theta(x_l)^2.

        theta may be one vector (K,) or a stack (..., K); the result has the stack shape.
        """
        x = evaluation_grid(grid) if np.isscalar(grid) else np.asarray(grid, dtype=float)
        theta = np.asarray(theta, dtype=float)
        target = _truth(truth)(x)
        denom = float(np.sum(target ** 2))
        if denom == 0:
            raise ZeroDivisionError("Truth vanishes on the evaluation grid")
        fitted = theta @ legendre_basis(x, theta.shape[-1]).T
        return np.sum((target - fitted) ** 2, axis=-1) / denom

    @staticmethod
    def abs_err(theta, truth: Truth, x):
        """|Theta(x) - <theta, l(x)>|."""
        theta = np.asarray(theta, dtype=float)
        x = np.asarray(x, dtype=float)
        return np.abs(_truth(truth)(x) - legendre_basis(x, theta.shape[-1]) @ theta)

    @staticmethod
    def trunc_wass_to_dirac(samples, ref) -> float:
        """Wasserstein distance to a point mass under d(a, b) = 1 ^ |a - b|: the mean truncated distance."""
        samples = np.asarray(samples, dtype=float)
        ref = np.asarray(ref, dtype=float)
        if samples.size == 0:
            raise DomainError("Need at least one sample")
        if ref.size == 1 and (samples.ndim <= 1 or samples.shape[-1] == 1):
            # scalar parameters, whether the reference is a number or a length-1 vector
            dist = np.abs(samples.reshape(-1) - ref.reshape(()))
        else:
            dist = np.linalg.norm(np.atleast_2d(samples) - ref, axis=-1)
        return float(np.mean(np.minimum(dist, 1.0)))

    @staticmethod
    def empirical_tv(samples, law, first_state: int = 1) -> float:
        """(1/2) sum_i |p_hat_i - pi_i| with law[i] the probability of state first_state + i.

        Empirical mass on states outside the law's support counts fully.
        """
        samples = np.asarray(samples).ravel()
        law = np.asarray(law, dtype=float)
        if samples.size == 0:
            raise DomainError("Need at least one sample")
        offsets = samples.astype(np.int64) - first_state
        inside = (offsets >= 0) & (offsets < len(law))
        p_hat = np.bincount(offsets[inside], minlength=len(law)) / samples.size
        outside = 1.0 - inside.mean()
        return float(0.5 * (np.sum(np.abs(p_hat - law)) + outside))

    @staticmethod
    def ks_distance(samples, lo: float = INDEX_LO, hi: float = INDEX_HI) -> float:
        """Kolmogorov-Smirnov statistic against Unif[lo, hi]."""
        samples = np.asarray(samples, dtype=float).ravel()
        if samples.size == 0:
            raise DomainError("Need at least one sample")
        if np.any(samples < lo) or np.any(samples > hi):
            raise DomainError(f"Samples must lie in [{lo}, {hi}]")
        return float(stats.kstest(samples, stats.uniform(loc=lo, scale=hi - lo).cdf).statistic)

    @staticmethod
    def chi_square_uniform(samples, n_states: int, first_state: int = 1) -> float:
        """p-value of Pearson's test of samples against Unif{first_state .. first_state + n - 1}."""
        samples = np.asarray(samples).ravel().astype(np.int64) - first_state
        if np.any(samples < 0) or np.any(samples >= n_states):
            raise DomainError("Samples outside the finite state space")
        counts = np.bincount(samples, minlength=n_states)
        return float(stats.chisquare(counts).pvalue)

    @staticmethod
    def sup_traj_distance(a: Trajectory, b: Trajectory) -> float:
        """max_t |a_t - b_t| over a shared time grid."""
        if a.times.shape != b.times.shape or not np.array_equal(a.times, b.times):
            raise DomainError("Trajectories are recorded on different time grids")
        return float(np.max(np.linalg.norm(a.states - b.states, axis=1)))

    @staticmethod
    def ensemble_stats(runs, times: Optional[Sequence[float]] = None, metric: str = "metric") -> EnsembleSummary:
        """Per-time sample mean and StD of J scalar series on one grid; StD is absent for J = 1."""
        runs = np.atleast_2d(np.asarray(runs, dtype=float))
        J, n = runs.shape
        if times is None:
            times = np.arange(n, dtype=float)
        if len(times) != n:
            raise DomainError(f"{n} values per run but {len(times)} times")
        # reduce along contiguous rows so the mean matches np.mean of one column exactly
        columns = np.ascontiguousarray(runs.T)
        std = columns.std(axis=1, ddof=1) if J >= 2 else None
        return EnsembleSummary(metric=metric, times=times, mean=columns.mean(axis=1), std=std, n_runs=J)

    @staticmethod
    def metric_name(problem) -> str:
        return "rel_err" if problem.kind is ProblemKind.POLY_REGRESSION else "trunc_dist"

    @staticmethod
    def metric_series(trajectory: Trajectory, problem, eval_points: int = EVAL_POINTS) -> np.ndarray:
        """rel_err of every recorded state for the regression problem, 1 ^ |theta - theta*| otherwise."""
        if problem.kind is ProblemKind.POLY_REGRESSION:
            return Diagnostics.rel_err(trajectory.states, problem.truth, eval_points)
        dist = np.linalg.norm(trajectory.states - problem.minimizer(), axis=1)
        return np.minimum(dist, 1.0)

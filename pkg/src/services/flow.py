"""
Gradient-flow integrators and the coupled stochastic gradient process driver.

SGPC and SGPD share one driver: the index process runs on the dilated clock
beta(t) (beta(t) = t / eps for a constant learning rate) and the value at the
start of every optimiser step is frozen for that step. Discrete SGD reuses the
driver with fresh stationary draws per step.

Index samples and the frozen affine fields A(y), b(y) are prepared FLOW_CHUNK
steps at a time; every step is then one batched affine update (or a fixed-point
solve), vectorised across seeds. Each seed keeps its own generator, so a seed's
trajectory does not depend on which other seeds share the ensemble.
"""
import logging
from typing import Callable, List, Sequence, Tuple

import numpy as np

from config.settings import FLOW_CHUNK
from models.constants import IntegratorKind, MidpointSolver
from models.run import IntegratorSpec, RunConfig, Trajectory
from services.index_processes import IndexProcessSampler
from utils.errors import ConvergenceError, DomainError, HorizonError, RunFailure

logger = logging.getLogger(__name__)

FieldSource = Callable[[int, int], Tuple[np.ndarray, np.ndarray]]


# ============================================================================
# INTEGRATOR KERNELS
# ============================================================================

def _apply(A: np.ndarray, theta: np.ndarray) -> np.ndarray:
    return (A @ theta[..., None])[..., 0]


def _mean_affine(problem, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """points (..., M) -> mini-batch averages A (..., K, K), b (..., K)."""
    A, b = problem.affine_gradient(points)
    return A.mean(axis=-3), b.mean(axis=-2)


def _uses_fixed_point(spec: IntegratorSpec) -> bool:
    return spec.kind is IntegratorKind.IMPLICIT_MIDPOINT and spec.solver is MidpointSolver.FIXED_POINT


def _affine_maps(A: np.ndarray, b: np.ndarray, h: float, spec: IntegratorSpec) -> Tuple[np.ndarray, np.ndarray]:
    """(L, c) with theta_next = L theta + c.

    Euler: L = I - hA, c = hb.
    Midpoint: (I + hA/2) theta_next = (I - hA/2) theta + hb, solved in closed form.
    """
    eye = np.eye(A.shape[-1])
    if spec.kind is IntegratorKind.EXPLICIT_EULER:
        return eye - h * A, h * b
    lhs = eye + 0.5 * h * A
    return np.linalg.solve(lhs, eye - 0.5 * h * A), np.linalg.solve(lhs, (h * b)[..., None])[..., 0]


def _fixed_point(theta: np.ndarray, A: np.ndarray, b: np.ndarray, h: float, spec: IntegratorSpec) -> np.ndarray:
    """Iterate x <- theta - h/2 (grad(x) + grad(theta)) from the Euler predictor.

    Returns the first iterate whose residual |F(x) - x|_inf is within tolerance.
    """
    g0 = _apply(A, theta) - b
    x = theta - h * g0
    residual = np.inf
    for _ in range(spec.max_iter):
        nxt = theta - 0.5 * h * (_apply(A, x) - b + g0)
        residual = float(np.max(np.abs(nxt - x)))
        if residual <= spec.tol:
            return x
        x = nxt
    raise ConvergenceError(f"Implicit midpoint did not converge in {spec.max_iter} iterations", residual)


def _check_contraction(problem, h: float, spec: IntegratorSpec):
    if not _uses_fixed_point(spec):
        return
    L = problem.lipschitz_constant()
    if h * L / 2 >= 1:
        logger.warning(f"h*L/2 = {h * L / 2:.3g} >= 1: fixed-point iteration may not contract (L={L:.4g})")


def integrator_step(problem, theta, y, h: float, spec: IntegratorSpec) -> np.ndarray:
    """One step of the flow of f(., y) with y frozen.

    y holds one index point per parameter vector, or a trailing mini-batch axis whose
    gradients are averaged.
    """
    if not h > 0:
        raise DomainError(f"Step h must be > 0, got {h}")
    theta = problem.check_theta(theta)
    y = np.asarray(y, dtype=float)
    if y.ndim == theta.ndim - 1:
        y = y[..., None]
    A, b = _mean_affine(problem, y)
    _check_contraction(problem, h, spec)
    if _uses_fixed_point(spec):
        return _fixed_point(theta, A, b, h, spec)
    L, c = _affine_maps(A, b, h, spec)
    return _apply(L, theta) + c


# ============================================================================
# DRIVER
# ============================================================================

def _integrate(problem, theta0: np.ndarray, n_steps: int, h: float, spec: IntegratorSpec,
               record_every: int, fields: FieldSource, seeds: Sequence, config_hash: str) -> List[Trajectory]:
    """Advance len(seeds) parameter vectors through n_steps frozen fields."""
    J = len(seeds)
    fixed_point = _uses_fixed_point(spec)
    _check_contraction(problem, h, spec)

    recorded = [i for i in range(0, n_steps + 1, record_every)]
    if recorded[-1] != n_steps:
        recorded.append(n_steps)
    out = np.empty((len(recorded), J, len(theta0)))
    theta = np.tile(theta0, (J, 1))
    out[0] = theta
    slot = 1

    def failure(message: str, step: int) -> RunFailure:
        seed = seeds[0] if J == 1 else None
        logger.error(f"{message} at t={step * h:.6g} (seed {seed})")
        return RunFailure(message, time=step * h, seed=seed)

    with np.errstate(over="raise", invalid="raise", divide="raise"):
        for first in range(0, n_steps, FLOW_CHUNK):
            count = min(FLOW_CHUNK, n_steps - first)
            try:
                A, b = fields(first, count)
                if fixed_point:
                    A, b = np.moveaxis(A, 1, 0), np.moveaxis(b, 1, 0)
                else:
                    maps, shifts = _affine_maps(A, b, h, spec)
                    maps = np.ascontiguousarray(np.moveaxis(maps, 1, 0))
                    shifts = np.ascontiguousarray(np.moveaxis(shifts, 1, 0))
            except (FloatingPointError, np.linalg.LinAlgError) as e:
                raise failure(f"Could not build step fields: {e}", first)

            for i in range(count):
                try:
                    if fixed_point:
                        theta = _fixed_point(theta, A[i], b[i], h, spec)
                    else:
                        theta = _apply(maps[i], theta) + shifts[i]
                except (FloatingPointError, ConvergenceError) as e:
                    raise failure(f"Integrator step failed: {e}", first + i)
                if slot < len(recorded) and recorded[slot] == first + i + 1:
                    out[slot] = theta
                    slot += 1

    times = np.asarray(recorded, dtype=float) * h
    return [
        Trajectory(times=times, states=out[:, j].copy(), seed=seeds[j], config_hash=config_hash)
        for j in range(J)
    ]


def _seed_list(seeds: Sequence[int]) -> List[int]:
    seeds = [int(s) for s in seeds]
    if not seeds:
        raise DomainError("Need at least one seed")
    return seeds


def run_sgp_ensemble(config: RunConfig, seeds: Sequence[int]) -> List[Trajectory]:
    """Stochastic gradient process for every seed, integrated side by side."""
    seeds = _seed_list(seeds)
    if not config.dilation.covers(config.horizon):
        raise HorizonError(f"Dilation {config.dilation!r} does not cover T={config.horizon}")
    J, M = len(seeds), config.batch_size
    r, delta = config.substeps_per_step, config.index_substep
    problem, index = config.problem, config.index

    rngs = [np.random.default_rng(s) for s in seeds]
    if M > 1:
        # mini-batch as a product process: every seed splits into M component streams
        rngs = [sub for rng in rngs for sub in IndexProcessSampler.substreams(rng, M)]
    states = [config.index_init] * (J * M)

    def fields(first: int, count: int):
        nonlocal states
        k = np.arange(first * r, (first + count) * r + 1)
        dilated = config.dilation.beta(np.minimum(k * delta, config.horizon))
        values = IndexProcessSampler.sample_rows(index, dilated, states, rngs, stride=r)
        states = list(values[:, -1])
        points = IndexProcessSampler.to_points(index, values[:, :-1]).reshape(J, M, count)
        return _mean_affine(problem, np.moveaxis(points, 1, 2))

    logger.info(
        f"SGP run {config.config_hash}: {index.kind.key}, {config.dilation!r}, "
        f"{config.integrator.kind.key}, J={J}, M={M}, steps={config.n_steps}"
    )
    return _integrate(problem, config.initial_theta(), config.n_steps, config.step, config.integrator,
                      config.record_every, fields, seeds, config.config_hash)


def run_sgp(config: RunConfig) -> Trajectory:
    """One stochastic gradient process run, deterministic given config.seed."""
    return run_sgp_ensemble(config, [config.seed])[0]


def run_sgd_ensemble(config: RunConfig, seeds: Sequence[int]) -> List[Trajectory]:
    """Discrete SGD with learning rate h: fresh i.i.d. draws from the index law every step.

    The dilation and index substep of the config are not used.
    """
    seeds = _seed_list(seeds)
    J, M = len(seeds), config.batch_size
    problem, index = config.problem, config.index
    rngs = [np.random.default_rng(s) for s in seeds]

    def fields(first: int, count: int):
        points = np.empty((J, count, M))
        for j, rng in enumerate(rngs):
            draws = IndexProcessSampler.stationary_sample(index, rng, size=(count, M))
            points[j] = IndexProcessSampler.to_points(index, draws)
        return _mean_affine(problem, points)

    logger.info(f"SGD run {config.config_hash}: {config.integrator.kind.key}, J={J}, M={M}, steps={config.n_steps}")
    return _integrate(problem, config.initial_theta(), config.n_steps, config.step, config.integrator,
                      config.record_every, fields, seeds, config.config_hash)


def run_sgd(config: RunConfig) -> Trajectory:
    return run_sgd_ensemble(config, [config.seed])[0]


def run_full_flow(problem, theta0, horizon: float, h: float, integrator: IntegratorSpec,
                  record_every: int = 1) -> Trajectory:
    """Deterministic flow of the mean gradient."""
    if not (h > 0 and horizon >= h):
        raise DomainError(f"Need 0 < h <= T, got h={h}, T={horizon}")
    n_steps = int(round(horizon / h))
    if abs(horizon / h - n_steps) > 1e-9 * n_steps:
        raise DomainError(f"T={horizon} is not a multiple of h={h}")
    theta0 = np.asarray(theta0, dtype=float)
    if theta0.ndim == 0:
        theta0 = np.full(problem.dimension, float(theta0))
    theta0 = problem.check_theta(theta0)
    mean_A, mean_b = problem.mean_affine

    def fields(first: int, count: int):
        K = problem.dimension
        return (np.broadcast_to(mean_A, (1, count, K, K)), np.broadcast_to(mean_b, (1, count, K)))

    return _integrate(problem, theta0, n_steps, h, integrator, record_every, fields, [None], "full_flow")[0]

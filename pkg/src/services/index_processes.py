"""
Samplers and stationary laws of the ergodic index processes.

Random draws per step are fixed in number and order so that a path sampled in
blocks equals the same path advanced one step at a time:

  jump_uniform        U ~ Unif[0,1) (stay if U <= exp(-lambda dt)), candidate ~ Unif[0,1)
  finite_jump         U ~ Unif[0,1) (stay if U <= exp(-lambda N dt)), candidate ~ Unif[0,1)
  reflected_brownian  psi ~ N(0, 1), then clamp (projection) or fold (mirror)
  countable_jump      jump count ~ Poisson(rate dt), landing state ~ Geometric(1/2)

Product processes advance every component on its own substream:
one integer base = rng.integers(2**63) is drawn from the parent, and component i
uses default_rng(SeedSequence([base, i])). The split happens once per path, so
stepping a product by hand means splitting once with substreams() and passing
the component streams to every step.
"""
import logging
from typing import List, Sequence, Union

import numpy as np

from config.settings import PATH_CHUNK
from models.constants import ProcessKind
from models.index_process import (
    MIRROR, STATIONARY, IndexPath, IndexProcessSpec, IndexValue, ProductSpec,
    JumpUniformSpec, ReflectedBrownianSpec, FiniteJumpSpec, CountableJumpSpec,
)
from utils.errors import DomainError

logger = logging.getLogger(__name__)


def _check_dt(dt: float):
    if not dt >= 0:
        raise DomainError(f"Time step must be >= 0, got {dt}")


class IndexProcessSampler:
    """Single steps, paths and stationary draws for every index process family."""

    # ------------------------------------------------------------------
    # Pure kernels (the random inputs are passed in)
    # ------------------------------------------------------------------

    @staticmethod
    def mjp_update(state: float, dt: float, spec: JumpUniformSpec, u: float, candidate_u: float) -> float:
        """Algorithm for one jump-process step given the two uniforms."""
        if u <= np.exp(-spec.rate * dt):
            return state
        return spec.lo + (spec.hi - spec.lo) * candidate_u

    @staticmethod
    def rbm_update(state: float, dt: float, spec: ReflectedBrownianSpec, psi: float) -> float:
        """Euler-Maruyama step followed by projection (or mirror folding) onto [lo, hi]."""
        x = state + spec.sigma * np.sqrt(dt) * psi
        if spec.reflection == MIRROR:
            return float(IndexProcessSampler._fold(np.float64(x), spec.lo, spec.hi))
        return min(max(x, spec.lo), spec.hi)

    @staticmethod
    def countable_update(state: int, n_jumps: int, landing: int) -> int:
        """State after n_jumps jumps; states alternate between 0 and {1, 2, ...}."""
        if n_jumps == 0:
            return state
        if state >= 1:
            return 0 if n_jumps % 2 == 1 else landing
        return landing if n_jumps % 2 == 1 else 0

    # ------------------------------------------------------------------
    # Single steps
    # ------------------------------------------------------------------

    @staticmethod
    def mjp_step(state: float, dt: float, spec: JumpUniformSpec, rng: np.random.Generator) -> float:
        """Stay with probability exp(-lambda dt), otherwise redraw uniformly on [lo, hi]."""
        _check_dt(dt)
        if not spec.contains(state):
            raise DomainError(f"State {state} outside [{spec.lo}, {spec.hi}]")
        u, candidate_u = rng.random(2)
        return IndexProcessSampler.mjp_update(state, dt, spec, u, candidate_u)

    @staticmethod
    def rbm_step(state: float, dt: float, spec: ReflectedBrownianSpec, rng: np.random.Generator) -> float:
        """clamp(state + sigma sqrt(dt) psi, lo, hi)."""
        _check_dt(dt)
        if not spec.contains(state):
            raise DomainError(f"State {state} outside [{spec.lo}, {spec.hi}]")
        return IndexProcessSampler.rbm_update(state, dt, spec, rng.standard_normal())

    @staticmethod
    def finite_step(state: int, dt: float, spec: FiniteJumpSpec, rng: np.random.Generator) -> int:
        """Exact kernel: stay w.p. exp(-lambda N dt), else uniform on {1..N}."""
        _check_dt(dt)
        if not spec.contains(state):
            raise DomainError(f"State {state} outside {{1..{spec.n_states}}}")
        u, candidate_u = rng.random(2)
        if u <= np.exp(-spec.rate * spec.n_states * dt):
            return int(state)
        return min(int(spec.n_states * candidate_u) + 1, spec.n_states)

    @staticmethod
    def countable_step(state: int, dt: float, spec: CountableJumpSpec, rng: np.random.Generator) -> int:
        """Exact over the whole gap: the number of jumps is Poisson, only its parity
        and the last landing state from 0 matter."""
        _check_dt(dt)
        if not spec.contains(state):
            raise DomainError(f"State {state} is not a nonnegative integer")
        n_jumps = int(rng.poisson(spec.rate * dt))
        landing = int(rng.geometric(0.5))
        return IndexProcessSampler.countable_update(int(state), n_jumps, landing)

    @staticmethod
    def step(
        state: IndexValue,
        dt: float,
        spec: IndexProcessSpec,
        rng: Union[np.random.Generator, Sequence[np.random.Generator]],
    ) -> IndexValue:
        """Dispatch to the family's single-step operation.

        A product takes one stream per component (as returned by substreams); given a
        single generator it splits it first, which draws a fresh base from it.
        """
        kind = spec.kind
        if kind is ProcessKind.JUMP_UNIFORM:
            return IndexProcessSampler.mjp_step(state, dt, spec, rng)
        if kind is ProcessKind.REFLECTED_BROWNIAN:
            return IndexProcessSampler.rbm_step(state, dt, spec, rng)
        if kind is ProcessKind.FINITE_JUMP:
            return IndexProcessSampler.finite_step(state, dt, spec, rng)
        if kind is ProcessKind.COUNTABLE_JUMP:
            return IndexProcessSampler.countable_step(state, dt, spec, rng)
        if isinstance(rng, np.random.Generator):
            subs = IndexProcessSampler.substreams(rng, len(spec.components))
        else:
            subs = list(rng)
            if len(subs) != len(spec.components):
                raise DomainError(f"Need {len(spec.components)} component streams, got {len(subs)}")
        return tuple(
            IndexProcessSampler.step(s, dt, c, sub)
            for s, c, sub in zip(state, spec.components, subs)
        )

    # ------------------------------------------------------------------
    # Stationary law
    # ------------------------------------------------------------------

    @staticmethod
    def stationary_sample(spec: IndexProcessSpec, rng: np.random.Generator, size=None):
        """Exact draw(s) from the invariant law of the process."""
        kind = spec.kind
        if kind in (ProcessKind.JUMP_UNIFORM, ProcessKind.REFLECTED_BROWNIAN):
            return spec.lo + (spec.hi - spec.lo) * rng.random(size)
        if kind is ProcessKind.FINITE_JUMP:
            draw = np.minimum(np.floor(spec.n_states * rng.random(size)).astype(np.int64) + 1, spec.n_states)
            return int(draw) if size is None else draw
        if kind is ProcessKind.COUNTABLE_JUMP:
            draw = rng.geometric(0.5, size) - 1
            return int(draw) if size is None else draw
        subs = IndexProcessSampler.substreams(rng, len(spec.components))
        parts = [IndexProcessSampler.stationary_sample(c, sub, size) for c, sub in zip(spec.components, subs)]
        return tuple(parts) if size is None else np.stack(parts, axis=-1)

    @staticmethod
    def stationary_probabilities(spec: IndexProcessSpec, max_state: int = 60) -> np.ndarray:
        """Invariant probabilities of a discrete family (states 1..N or 0..max_state)."""
        if spec.kind is ProcessKind.FINITE_JUMP:
            return np.full(spec.n_states, 1.0 / spec.n_states)
        if spec.kind is ProcessKind.COUNTABLE_JUMP:
            return 0.5 ** (np.arange(max_state + 1) + 1.0)
        raise DomainError(f"{spec.kind.key} has no probability mass function")

    @staticmethod
    def finite_tv_exact(n_states: int, rate: float, t: float) -> float:
        """TV distance to Unif{1..N} at time t when started from a single state."""
        return (1.0 - 1.0 / n_states) * float(np.exp(-rate * n_states * t))

    # ------------------------------------------------------------------
    # Paths
    # ------------------------------------------------------------------

    @staticmethod
    def substreams(rng: np.random.Generator, count: int) -> List[np.random.Generator]:
        """Independent component streams derived from one draw of the parent."""
        base = int(rng.integers(0, 2 ** 63))
        return [np.random.default_rng(np.random.SeedSequence([base, i])) for i in range(count)]

    @staticmethod
    def sample_path(
        spec: IndexProcessSpec,
        grid: Sequence[float],
        init: Union[IndexValue, str],
        rng: np.random.Generator,
    ) -> IndexPath:
        """Sample the process on a grid starting at 0, from a fixed or stationary start."""
        grid = IndexProcessSampler._checked_grid(grid)

        if isinstance(spec, ProductSpec):
            subs = IndexProcessSampler.substreams(rng, len(spec.components))
            if isinstance(init, str):
                inits = [init] * len(spec.components)
            else:
                inits = list(np.broadcast_to(np.asarray(init, dtype=float), (len(spec.components),)))
            columns = [
                IndexProcessSampler.sample_rows(comp, grid, [i0], [sub])[0]
                for comp, i0, sub in zip(spec.components, inits, subs)
            ]
            return IndexPath(grid=grid, values=np.stack(columns, axis=1).astype(float), spec=spec)

        values = IndexProcessSampler.sample_rows(spec, grid, [init], [rng])[0]
        return IndexPath(grid=grid, values=values, spec=spec)

    @staticmethod
    def sample_rows(
        spec: IndexProcessSpec,
        grid: np.ndarray,
        inits: Sequence[Union[IndexValue, str]],
        rngs: Sequence[np.random.Generator],
        stride: int = 1,
    ) -> np.ndarray:
        """Independent paths of one scalar process, one per (init, rng) row.

        Returns the values at grid[::stride], shape (rows, ceil(len(grid) / stride)).
        Each row consumes its own stream exactly as sample_path would.
        """
        if isinstance(spec, ProductSpec):
            raise DomainError("sample_rows takes a scalar process; split products into rows")
        grid = np.asarray(grid, dtype=float)
        if len(inits) != len(rngs):
            raise DomainError("Need one initial value per random stream")

        states = []
        for init, rng in zip(inits, rngs):
            if isinstance(init, str):
                if init != STATIONARY:
                    raise DomainError(f"Unknown initial condition '{init}'")
                init = IndexProcessSampler.stationary_sample(spec, rng)
            if not spec.contains(init):
                raise DomainError(f"Initial value {init} incompatible with {spec.kind.key}")
            states.append(init)
        dtype = float if spec.is_continuous else np.int64
        states = np.asarray(states, dtype=dtype)

        if stride < 1:
            raise DomainError(f"Stride must be >= 1, got {stride}")
        gaps = np.diff(grid)
        kept = [states[:, None]]

        for start in range(0, len(gaps), PATH_CHUNK):
            chunk = gaps[start:start + PATH_CHUNK]
            block = IndexProcessSampler._advance_rows(spec, states, chunk, rngs)
            # block[:, j] is the value at grid index start + j + 1
            positions = np.arange(start + 1, start + 1 + len(chunk))
            take = positions % stride == 0
            if np.any(take):
                kept.append(block[:, take])
            states = block[:, -1]

        return np.concatenate(kept, axis=1)

    @staticmethod
    def to_points(spec: IndexProcessSpec, values) -> np.ndarray:
        """Embed index values into S = [lo, hi] (finite states as equispaced levels)."""
        values = np.asarray(values)
        if isinstance(spec, ProductSpec):
            return np.stack(
                [IndexProcessSampler.to_points(c, values[..., i]) for i, c in enumerate(spec.components)],
                axis=-1,
            )
        if spec.is_continuous:
            return values.astype(float)
        if spec.kind is ProcessKind.FINITE_JUMP:
            step = (spec.hi - spec.lo) / (spec.n_states - 1)
            return spec.lo + (values.astype(float) - 1.0) * step
        raise DomainError(f"{spec.kind.key} states have no embedding into an interval")

    # ------------------------------------------------------------------
    # Block samplers
    # ------------------------------------------------------------------

    @staticmethod
    def _checked_grid(grid) -> np.ndarray:
        grid = np.asarray(grid, dtype=float)
        if grid.ndim != 1 or len(grid) == 0:
            raise DomainError("Grid must be a non-empty 1-D sequence of times")
        if grid[0] != 0.0:
            raise DomainError(f"Grid must start at 0, got {grid[0]}")
        if np.any(np.diff(grid) <= 0):
            raise DomainError("Grid must be strictly increasing")
        return grid

    @staticmethod
    def _advance_rows(spec, states: np.ndarray, gaps: np.ndarray, rngs) -> np.ndarray:
        """Values at the end of every gap for every row, shape (rows, len(gaps))."""
        rows, n = len(states), len(gaps)
        kind = spec.kind

        if kind in (ProcessKind.JUMP_UNIFORM, ProcessKind.FINITE_JUMP):
            if kind is ProcessKind.JUMP_UNIFORM:
                stay_prob = np.exp(-spec.rate * gaps)
            else:
                stay_prob = np.exp(-spec.rate * spec.n_states * gaps)
            out = np.empty((rows, n), dtype=states.dtype)
            steps = np.arange(n)
            for r, rng in enumerate(rngs):
                u = rng.random((n, 2))
                if kind is ProcessKind.JUMP_UNIFORM:
                    candidates = spec.lo + (spec.hi - spec.lo) * u[:, 1]
                else:
                    candidates = np.minimum(np.floor(spec.n_states * u[:, 1]).astype(np.int64) + 1, spec.n_states)
                last_jump = np.maximum.accumulate(np.where(u[:, 0] <= stay_prob, -1, steps))
                out[r] = np.where(last_jump >= 0, candidates[np.maximum(last_jump, 0)], states[r])
            return out

        if kind is ProcessKind.REFLECTED_BROWNIAN:
            psi = np.stack([rng.standard_normal(n) for rng in rngs])
            increments = spec.sigma * np.sqrt(gaps) * psi
            if spec.reflection == MIRROR:
                return IndexProcessSampler._folded_walk(states.astype(float), increments, spec.lo, spec.hi)
            return IndexProcessSampler._clamped_walk(states.astype(float), increments, spec.lo, spec.hi)

        out = np.empty((rows, n), dtype=np.int64)
        for r, rng in enumerate(rngs):
            state = int(states[r])
            for j, dt in enumerate(gaps):
                n_jumps = int(rng.poisson(spec.rate * dt))
                landing = int(rng.geometric(0.5))
                state = IndexProcessSampler.countable_update(state, n_jumps, landing)
                out[r, j] = state
        return out

    @staticmethod
    def _clamped_walk(start: np.ndarray, increments: np.ndarray, lo: float, hi: float) -> np.ndarray:
        """x_k = clamp(x_{k-1} + increments[:, k], lo, hi) for every row."""
        rows, n = increments.shape
        out = np.empty((rows, n))
        if rows == 1:
            x = float(start[0])
            column = out[0]
            for k, inc in enumerate(increments[0].tolist()):
                x = min(max(x + inc, lo), hi)
                column[k] = x
            return out
        x = start.copy()
        for k in range(n):
            x += increments[:, k]
            np.clip(x, lo, hi, out=x)
            out[:, k] = x
        return out

    @staticmethod
    def _fold(x: np.ndarray, lo: float, hi: float) -> np.ndarray:
        """Method of images: reflect x into [lo, hi] across both walls."""
        width = hi - lo
        y = np.mod(x - lo, 2.0 * width)
        return lo + np.where(y > width, 2.0 * width - y, y)

    @staticmethod
    def _folded_walk(start: np.ndarray, increments: np.ndarray, lo: float, hi: float) -> np.ndarray:
        """x_k = fold(x_{k-1} + increments[:, k]) for every row."""
        rows, n = increments.shape
        out = np.empty((rows, n))
        x = start.copy()
        for k in range(n):
            x = IndexProcessSampler._fold(x + increments[:, k], lo, hi)
            out[:, k] = x
        return out

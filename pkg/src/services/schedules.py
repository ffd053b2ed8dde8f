"""
Time dilations: clock maps beta turning optimiser time t into index-process time.

constant   beta(t) = t / eps                              (constant learning rate eps)
piecewise  beta(t) = (n-1) + (t - H_{n-1}) / eta_n  on [H_{n-1}, H_n),  H_n = eta_1 + ... + eta_n
smooth     beta(t) = int_0^t mu(s) ds                     (mu from a closed catalogue)
"""
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Dict, Mapping, Optional, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid

from models.constants import DilationKind, MuFamily
from utils.errors import ConfigError, DomainError, HorizonError

logger = logging.getLogger(__name__)


# ============================================================================
# SPEED FUNCTION CATALOGUE
# ============================================================================

_MU_PARAMS = {
    MuFamily.POWER_LOG: ("c", "p"),
    MuFamily.AFFINE: ("a", "b"),
}


def _mu_params(family: MuFamily, params: Mapping[str, float]) -> Dict[str, float]:
    expected = _MU_PARAMS[family]
    unknown = set(params) - set(expected)
    missing = set(expected) - set(params)
    if unknown or missing:
        raise DomainError(
            f"{family.key} takes parameters {expected}; unknown {sorted(unknown)}, missing {sorted(missing)}"
        )
    return {k: float(params[k]) for k in expected}


def mu_value(family: MuFamily, params: Mapping[str, float], t):
    """mu(t) for a catalogue family."""
    p = _mu_params(family, params)
    t = np.asarray(t, dtype=float)
    if family is MuFamily.POWER_LOG:
        return p["c"] * np.log(t + 2.0) ** p["p"]
    return p["a"] * t + p["b"]


def mu_derivative(family: MuFamily, params: Mapping[str, float], t):
    """mu'(t) in closed form."""
    p = _mu_params(family, params)
    t = np.asarray(t, dtype=float)
    if family is MuFamily.POWER_LOG:
        return p["c"] * p["p"] * np.log(t + 2.0) ** (p["p"] - 1.0) / (t + 2.0)
    return np.full_like(t, p["a"])


@dataclass(frozen=True)
class AdmissibilityReport:
    """Outcome of probing the growth conditions on mu."""
    max_tail_ratio: float
    diverges: bool
    non_decreasing: bool

    def admissible(self, tol: float = 0.1) -> bool:
        """mu must grow without bound, never decrease, and have a vanishing tail ratio."""
        return self.diverges and self.non_decreasing and self.max_tail_ratio <= tol


def mu_admissibility(family: MuFamily, params: Mapping[str, float], probe_grid: Sequence[float]) -> AdmissibilityReport:
    """Sup of mu'(t) t / mu(t) over the tail half of the probe grid, plus the divergence flag."""
    grid = np.asarray(probe_grid, dtype=float)
    if grid.ndim != 1 or len(grid) == 0 or np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise DomainError("Probe grid must be positive and increasing")
    p = _mu_params(family, params)

    tail = grid[len(grid) // 2:]
    ratio = mu_derivative(family, p, tail) * tail / mu_value(family, p, tail)

    if family is MuFamily.POWER_LOG:
        diverges = p["c"] > 0 and p["p"] > 0
        non_decreasing = p["c"] > 0 and p["p"] >= 0
    else:
        diverges = p["a"] > 0
        non_decreasing = p["a"] >= 0

    report = AdmissibilityReport(float(np.max(ratio)), bool(diverges), bool(non_decreasing))
    logger.debug(f"Admissibility of {family.key} {p}: {report}")
    return report


# ============================================================================
# DILATIONS
# ============================================================================

class TimeDilation(ABC):
    """Monotone clock map with beta(0) = 0."""

    kind: DilationKind

    @abstractmethod
    def beta(self, t):
        """Dilated time; accepts scalars or arrays."""

    @abstractmethod
    def speed(self, t):
        """beta'(t) (right derivative for the piecewise clock)."""

    @property
    def horizon(self) -> float:
        """Largest optimiser time the dilation can evaluate."""
        return math.inf

    def learning_rate(self, t):
        """Equivalent learning rate 1 / beta'(t)."""
        return 1.0 / self.speed(t)

    def covers(self, t: float) -> bool:
        return t <= self.horizon

    def _checked_times(self, t) -> np.ndarray:
        arr = np.asarray(t, dtype=float)
        if np.any(arr < 0):
            raise DomainError("Dilation is only defined for t >= 0")
        if np.any(arr > self.horizon):
            raise HorizonError(f"t={np.max(arr)} beyond the dilation horizon {self.horizon}")
        return arr

    @abstractmethod
    def to_dict(self) -> Dict[str, Any]:
        """Config block for this dilation."""


class ConstantDilation(TimeDilation):
    """beta(t) = t / eps."""

    kind = DilationKind.CONSTANT

    def __init__(self, eps: float):
        if not (np.isfinite(eps) and eps > 0):
            raise DomainError(f"Learning rate eps must be > 0, got {eps}")
        self.eps = float(eps)

    def beta(self, t):
        arr = self._checked_times(t)
        out = arr / self.eps
        return float(out) if out.ndim == 0 else out

    def speed(self, t):
        arr = np.asarray(t, dtype=float)
        out = np.full_like(arr, 1.0 / self.eps)
        return float(out) if out.ndim == 0 else out

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind.key, "epsilon": self.eps}

    def __repr__(self):
        return f"ConstantDilation(eps={self.eps})"


class PiecewiseDilation(TimeDilation):
    """Continuous piecewise-linear clock from a learning-rate sequence eta_1 >= eta_2 >= ... > 0."""

    kind = DilationKind.PIECEWISE

    def __init__(self, etas: Sequence[float]):
        etas = np.asarray(etas, dtype=float)
        if etas.ndim != 1 or len(etas) == 0:
            raise DomainError("Learning-rate sequence must be a non-empty 1-D sequence")
        if np.any(~np.isfinite(etas)) or np.any(etas <= 0):
            raise DomainError("Learning rates must be positive")
        if np.any(np.diff(etas) > 0):
            raise DomainError("Learning rates must be non-increasing")
        self.etas = etas
        self.etas.setflags(write=False)
        self._switch = np.concatenate([[0.0], np.cumsum(etas)])
        self._switch.setflags(write=False)

    @classmethod
    def harmonic(cls, count: int, c: float = 1.0) -> "PiecewiseDilation":
        """eta_n = c / n for n = 1..count."""
        return cls(c / np.arange(1, count + 1))

    @property
    def switch_times(self) -> np.ndarray:
        """H_0 = 0, H_1, ..., H_N."""
        return self._switch

    @property
    def horizon(self) -> float:
        return float(self._switch[-1])

    def _segment(self, arr: np.ndarray) -> np.ndarray:
        # index n-1 of the segment [H_{n-1}, H_n) containing t; t = H_N sits on the last one
        idx = np.searchsorted(self._switch, arr, side="right") - 1
        return np.minimum(idx, len(self.etas) - 1)

    def beta(self, t):
        arr = self._checked_times(t)
        idx = self._segment(arr)
        out = idx + (arr - self._switch[idx]) / self.etas[idx]
        return float(out) if out.ndim == 0 else out

    def speed(self, t):
        arr = self._checked_times(t)
        out = 1.0 / self.etas[self._segment(arr)]
        return float(out) if out.ndim == 0 else out

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind.key, "etas": self.etas.tolist()}

    def __repr__(self):
        return f"PiecewiseDilation(n={len(self.etas)}, horizon={self.horizon:.6g})"


class SmoothDilation(TimeDilation):
    """beta(t) = int_0^t mu(s) ds, cached as a composite trapezoid on [0, horizon]."""

    kind = DilationKind.SMOOTH

    def __init__(self, family: MuFamily, params: Mapping[str, float], horizon: float, step: float):
        if not (np.isfinite(horizon) and horizon > 0):
            raise DomainError(f"Horizon must be > 0, got {horizon}")
        if not (np.isfinite(step) and step > 0):
            raise DomainError(f"Cache step must be > 0, got {step}")
        self.family = family
        self.params = _mu_params(family, params)
        self.step = float(step)
        self._horizon = float(horizon)

        n_cells = int(math.ceil(horizon / step - 1e-9))
        self._grid = np.arange(n_cells + 1) * self.step
        self._mu = mu_value(family, self.params, self._grid)
        if np.any(self._mu <= 0):
            bad = self._grid[np.argmax(self._mu <= 0)]
            raise DomainError(f"mu must be positive; mu({bad:.6g}) <= 0 for {family.key} {self.params}")
        if np.any(np.diff(self._mu) < 0):
            logger.warning(f"mu of {family.key} {self.params} decreases on [0, {horizon}]")
        self._cumulative = cumulative_trapezoid(self._mu, self._grid, initial=0.0)
        for arr in (self._grid, self._mu, self._cumulative):
            arr.setflags(write=False)

    @property
    def horizon(self) -> float:
        return self._horizon

    def beta(self, t):
        arr = self._checked_times(t)
        idx = np.minimum((arr / self.step).astype(np.int64), len(self._grid) - 1)
        left = self._grid[idx]
        # trapezoid on the partial cell [t_i, t]
        out = self._cumulative[idx] + 0.5 * (arr - left) * (self._mu[idx] + mu_value(self.family, self.params, arr))
        return float(out) if out.ndim == 0 else out

    def speed(self, t):
        arr = self._checked_times(t)
        out = mu_value(self.family, self.params, arr)
        return float(out) if np.ndim(out) == 0 else out

    def admissibility(self, probe_grid: Optional[Sequence[float]] = None) -> AdmissibilityReport:
        if probe_grid is None:
            probe_grid = np.geomspace(1.0, 1e4, 200)
        return mu_admissibility(self.family, self.params, probe_grid)

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind.key, "family": self.family.key, "params": dict(self.params), "step": self.step}

    def __repr__(self):
        return f"SmoothDilation({self.family.key}, {self.params}, step={self.step})"


# ============================================================================
# FUNCTIONAL FORMS
# ============================================================================

def beta_piecewise(t, etas: Sequence[float]):
    """beta(t) for the learning-rate sequence etas."""
    return PiecewiseDilation(etas).beta(t)


def beta_smooth(t, family: MuFamily, params: Mapping[str, float], step: float = 1e-2):
    """int_0^t mu(s) ds by composite trapezoid with the given step."""
    horizon = max(float(np.max(t)), step)
    return SmoothDilation(family, params, horizon=horizon, step=step).beta(t)


def dilation_from_dict(data: Mapping[str, Any], horizon: float, default_step: float) -> TimeDilation:
    """Build a dilation from its config block; smooth caches cover [0, horizon]."""
    if not isinstance(data, Mapping) or "kind" not in data:
        raise ConfigError(f"Dilation block needs a 'kind': {data!r}")
    try:
        kind = DilationKind.from_key(data["kind"])
        params = {k: v for k, v in data.items() if k != "kind"}

        if kind is DilationKind.CONSTANT:
            _only(params, {"epsilon"}, kind)
            return ConstantDilation(params.get("epsilon", 1.0))

        if kind is DilationKind.PIECEWISE:
            _only(params, {"etas", "harmonic_c", "count"}, kind)
            if "etas" in params:
                return PiecewiseDilation(params["etas"])
            if "count" in params:
                return PiecewiseDilation.harmonic(int(params["count"]), params.get("harmonic_c", 1.0))
            raise ConfigError("piecewise dilation needs 'etas' or 'count' (+ 'harmonic_c')")

        _only(params, {"family", "params", "step"}, kind)
        family = MuFamily.from_key(params.get("family", ""))
        return SmoothDilation(family, params.get("params", {}), horizon=horizon,
                              step=params.get("step", default_step))
    except (DomainError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"Invalid dilation {dict(data)}: {e}")


def _only(params: Mapping[str, Any], allowed, kind: DilationKind):
    unknown = set(params) - set(allowed)
    if unknown:
        raise ConfigError(f"Unknown keys for {kind.key} dilation: {sorted(unknown)}")

"""
Index process specifications and sampled paths.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, Tuple, Union

import numpy as np
import pandas as pd

from models.constants import ProcessKind, INDEX_LO, INDEX_HI, COUNTABLE_DEFAULT_RATE
from utils.errors import DomainError, ConfigError

# boundary schemes of the reflected Brownian sampler
PROJECTION = "projection"
MIRROR = "mirror"
REFLECTIONS = (PROJECTION, MIRROR)

IndexValue = Union[float, int, Tuple[Any, ...]]

# initial condition drawn from the invariant law
STATIONARY = "stationary"


def _check_interval(lo: float, hi: float):
    if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
        raise DomainError(f"Invalid interval [{lo}, {hi}]: need finite lo < hi")


@dataclass(frozen=True)
class JumpUniformSpec:
    """Pure jump process on [lo, hi]; at rate lambda it jumps to a fresh uniform point."""
    rate: float
    lo: float = INDEX_LO
    hi: float = INDEX_HI

    def __post_init__(self):
        if not (np.isfinite(self.rate) and self.rate >= 0):
            raise DomainError(f"Jump rate must be >= 0, got {self.rate}")
        _check_interval(self.lo, self.hi)

    @property
    def kind(self) -> ProcessKind:
        return ProcessKind.JUMP_UNIFORM

    @property
    def is_continuous(self) -> bool:
        return True

    def contains(self, value) -> bool:
        return bool(np.all((np.asarray(value) >= self.lo) & (np.asarray(value) <= self.hi)))


@dataclass(frozen=True)
class ReflectedBrownianSpec:
    """Brownian motion with diffusion scale sigma kept in [lo, hi].

    reflection "projection" clamps every Euler step onto the interval; "mirror" folds
    the step back by the method of images, which is the exact reflected kernel.
    """
    sigma: float
    lo: float = INDEX_LO
    hi: float = INDEX_HI
    reflection: str = PROJECTION

    def __post_init__(self):
        if not (np.isfinite(self.sigma) and self.sigma >= 0):
            raise DomainError(f"Diffusion scale must be >= 0, got {self.sigma}")
        if self.reflection not in REFLECTIONS:
            raise DomainError(f"Reflection must be one of {REFLECTIONS}, got '{self.reflection}'")
        _check_interval(self.lo, self.hi)

    @property
    def kind(self) -> ProcessKind:
        return ProcessKind.REFLECTED_BROWNIAN

    @property
    def is_continuous(self) -> bool:
        return True

    def contains(self, value) -> bool:
        return bool(np.all((np.asarray(value) >= self.lo) & (np.asarray(value) <= self.hi)))


@dataclass(frozen=True)
class FiniteJumpSpec:
    """Jump process on {1..N} with generator Lambda_N - N*lambda*I.

    lo/hi only matter when states are embedded as N equispaced points of [lo, hi].
    """
    rate: float
    n_states: int
    lo: float = INDEX_LO
    hi: float = INDEX_HI

    def __post_init__(self):
        if not (np.isfinite(self.rate) and self.rate >= 0):
            raise DomainError(f"Jump rate must be >= 0, got {self.rate}")
        if int(self.n_states) != self.n_states or self.n_states < 2:
            raise DomainError(f"Finite state space needs N >= 2 states, got {self.n_states}")
        _check_interval(self.lo, self.hi)

    @property
    def kind(self) -> ProcessKind:
        return ProcessKind.FINITE_JUMP

    @property
    def is_continuous(self) -> bool:
        return False

    def contains(self, value) -> bool:
        arr = np.asarray(value)
        return bool(np.all((arr == np.round(arr)) & (arr >= 1) & (arr <= self.n_states)))


@dataclass(frozen=True)
class CountableJumpSpec:
    """Jump process on {0, 1, 2, ...}: k >= 1 jumps to 0, 0 jumps to i w.p. 2^-i."""
    rate: float = COUNTABLE_DEFAULT_RATE

    def __post_init__(self):
        if not (np.isfinite(self.rate) and self.rate >= 0):
            raise DomainError(f"Jump rate must be >= 0, got {self.rate}")

    @property
    def kind(self) -> ProcessKind:
        return ProcessKind.COUNTABLE_JUMP

    @property
    def is_continuous(self) -> bool:
        return False

    def contains(self, value) -> bool:
        arr = np.asarray(value)
        return bool(np.all((arr == np.round(arr)) & (arr >= 0)))


ScalarSpec = Union[JumpUniformSpec, ReflectedBrownianSpec, FiniteJumpSpec, CountableJumpSpec]


@dataclass(frozen=True)
class ProductSpec:
    """Independent components advanced side by side (mini-batches, multi-dimensional S)."""
    components: Tuple[ScalarSpec, ...]

    def __post_init__(self):
        flat = []
        for comp in self.components:
            if isinstance(comp, ProductSpec):
                flat.extend(comp.components)
            else:
                flat.append(comp)
        if not flat:
            raise DomainError("Product process needs at least one component")
        object.__setattr__(self, "components", tuple(flat))

    @classmethod
    def replicate(cls, spec: ScalarSpec, copies: int) -> "ProductSpec":
        """M independent copies of one process."""
        if copies < 1:
            raise DomainError(f"Need at least one copy, got {copies}")
        return cls(tuple([spec] * copies))

    @property
    def kind(self) -> ProcessKind:
        return ProcessKind.PRODUCT

    @property
    def is_continuous(self) -> bool:
        return all(c.is_continuous for c in self.components)

    def contains(self, value) -> bool:
        arr = np.asarray(value, dtype=float)
        if arr.shape[-1] != len(self.components):
            return False
        return all(c.contains(arr[..., i]) for i, c in enumerate(self.components))


IndexProcessSpec = Union[ScalarSpec, ProductSpec]


@dataclass
class IndexPath:
    """Cadlag sample path of an index process recorded on a time grid.

    values has shape (n,) for scalar processes and (n, C) for product processes.
    """
    grid: np.ndarray
    values: np.ndarray
    spec: IndexProcessSpec = field(repr=False)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values)
        if self.grid.ndim != 1 or len(self.grid) != len(self.values):
            raise DomainError(
                f"Grid and values must have equal length, got {len(self.grid)} and {len(self.values)}"
            )
        if self.grid[0] != 0.0 or np.any(np.diff(self.grid) <= 0):
            raise DomainError("Path grid must start at 0 and be strictly increasing")
        if not self.spec.contains(self.values):
            raise DomainError(f"Path leaves the state space of {self.spec.kind.key}")
        self.grid.setflags(write=False)
        self.values.setflags(write=False)

    def value_at(self, t: float):
        """Right-continuous lookup: value at the last grid point <= t."""
        if t < 0:
            raise DomainError(f"Negative time {t}")
        return self.values[np.searchsorted(self.grid, t, side="right") - 1]

    def to_frame(self) -> pd.DataFrame:
        """Columns t, value (or value_1..value_C for products)."""
        if self.values.ndim == 1:
            data = {"t": self.grid, "value": self.values}
        else:
            data = {"t": self.grid}
            for i in range(self.values.shape[1]):
                data[f"value_{i + 1}"] = self.values[:, i]
        return pd.DataFrame(data)


_SPEC_FIELDS = {
    ProcessKind.JUMP_UNIFORM: (JumpUniformSpec, {"rate", "lo", "hi"}),
    ProcessKind.REFLECTED_BROWNIAN: (ReflectedBrownianSpec, {"sigma", "lo", "hi", "reflection"}),
    ProcessKind.FINITE_JUMP: (FiniteJumpSpec, {"rate", "n_states", "lo", "hi"}),
    ProcessKind.COUNTABLE_JUMP: (CountableJumpSpec, {"rate"}),
}


def index_spec_from_dict(data: Dict[str, Any]) -> IndexProcessSpec:
    """Build a spec from its config block, e.g. {"kind": "jump_uniform", "rate": 1.0}."""
    if not isinstance(data, dict) or "kind" not in data:
        raise ConfigError(f"Index process block needs a 'kind': {data!r}")
    try:
        kind = ProcessKind.from_key(data["kind"])
    except ValueError as e:
        raise ConfigError(str(e))

    params = {k: v for k, v in data.items() if k != "kind"}
    if kind is ProcessKind.PRODUCT:
        unknown = set(params) - {"components"}
        if unknown:
            raise ConfigError(f"Unknown keys for product process: {sorted(unknown)}")
        return ProductSpec(tuple(index_spec_from_dict(c) for c in params.get("components", [])))

    cls, allowed = _SPEC_FIELDS[kind]
    unknown = set(params) - allowed
    if unknown:
        raise ConfigError(f"Unknown keys for {kind.key}: {sorted(unknown)}")
    try:
        return cls(**params)
    except (TypeError, DomainError) as e:
        raise ConfigError(f"Invalid {kind.key} parameters: {e}")


def index_spec_to_dict(spec: IndexProcessSpec) -> Dict[str, Any]:
    """Inverse of index_spec_from_dict."""
    if isinstance(spec, ProductSpec):
        return {"kind": spec.kind.key, "components": [index_spec_to_dict(c) for c in spec.components]}
    _, allowed = _SPEC_FIELDS[spec.kind]
    out: Dict[str, Any] = {"kind": spec.kind.key}
    for name in sorted(allowed):
        out[name] = getattr(spec, name)
    return out

"""
Problem specifications as they appear in experiment configs.
"""
from dataclasses import dataclass, field, asdict
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np

from config.settings import GRF_MODES, LEGENDRE_SIZE, QUADRATURE_INTERVALS, REGULARIZATION
from models.constants import GRF_EXPONENT, GRF_OFFSET, GRF_SCALE, ProblemKind
from utils.errors import ConfigError, DomainError


@dataclass(frozen=True)
class GRFNoiseSpec:
    """Truncated sine expansion of the observational noise.

    amplitudes, when given, override the seeded standard normal draws.
    modes = 0 means noiseless data.
    """
    modes: int = GRF_MODES
    seed: Optional[int] = None
    amplitudes: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if int(self.modes) != self.modes or self.modes < 0:
            raise DomainError(f"Number of modes must be a nonnegative integer, got {self.modes}")
        if self.amplitudes is not None:
            amps = tuple(float(a) for a in self.amplitudes)
            if len(amps) != self.modes:
                raise DomainError(f"Expected {self.modes} amplitudes, got {len(amps)}")
            object.__setattr__(self, "amplitudes", amps)

    def coefficients(self) -> np.ndarray:
        """c_j = 10 / (1000 + (pi j)^1.5), j = 1..modes."""
        j = np.arange(1, self.modes + 1, dtype=float)
        return GRF_SCALE / (GRF_OFFSET + (np.pi * j) ** GRF_EXPONENT)

    def realize(self) -> np.ndarray:
        """Amplitudes Xi_1..Xi_J; deterministic for a fixed seed."""
        if self.amplitudes is not None:
            return np.asarray(self.amplitudes, dtype=float)
        return np.random.default_rng(self.seed).standard_normal(self.modes)


@dataclass(frozen=True)
class QuadraticToySpec:
    """f(theta, y) = (theta - y^2)^2 / 2 on S = [-1, 1]."""

    @property
    def kind(self) -> ProblemKind:
        return ProblemKind.QUADRATIC_TOY


@dataclass(frozen=True)
class PolyRegressionSpec:
    """Regularised Legendre regression against one noisy observation of a truth function."""
    basis_size: int = LEGENDRE_SIZE
    alpha: float = REGULARIZATION
    truth: str = "sin_pi"
    noise: GRFNoiseSpec = field(default_factory=GRFNoiseSpec)
    quadrature_intervals: int = QUADRATURE_INTERVALS

    def __post_init__(self):
        if int(self.basis_size) != self.basis_size or self.basis_size < 1:
            raise DomainError(f"Basis size must be >= 1, got {self.basis_size}")
        if not (np.isfinite(self.alpha) and self.alpha >= 0):
            raise DomainError(f"Regularisation weight must be >= 0, got {self.alpha}")
        if self.quadrature_intervals < 2 or self.quadrature_intervals % 2:
            raise DomainError(f"Simpson's rule needs an even interval count, got {self.quadrature_intervals}")

    @property
    def kind(self) -> ProblemKind:
        return ProblemKind.POLY_REGRESSION


ProblemSpec = Union[QuadraticToySpec, PolyRegressionSpec]


def problem_spec_from_dict(data: Dict[str, Any]) -> ProblemSpec:
    """Parse a problem block such as {"kind": "poly_regression", "alpha": 1e-4, "noise": {"seed": 3}}."""
    if not isinstance(data, dict) or "kind" not in data:
        raise ConfigError(f"Problem block needs a 'kind': {data!r}")
    try:
        kind = ProblemKind.from_key(data["kind"])
    except ValueError as e:
        raise ConfigError(str(e))
    params = {k: v for k, v in data.items() if k != "kind"}

    if kind is ProblemKind.QUADRATIC_TOY:
        if params:
            raise ConfigError(f"Unknown keys for toy problem: {sorted(params)}")
        return QuadraticToySpec()

    allowed = {"basis_size", "alpha", "truth", "noise", "quadrature_intervals"}
    unknown = set(params) - allowed
    if unknown:
        raise ConfigError(f"Unknown keys for {kind.key}: {sorted(unknown)}")
    noise_block = params.pop("noise", {})
    if not isinstance(noise_block, dict):
        raise ConfigError("'noise' must be a mapping")
    unknown = set(noise_block) - {"modes", "seed", "amplitudes"}
    if unknown:
        raise ConfigError(f"Unknown keys for noise: {sorted(unknown)}")
    try:
        amps = noise_block.get("amplitudes")
        noise = GRFNoiseSpec(
            modes=noise_block.get("modes", GRF_MODES if amps is None else len(amps)),
            seed=noise_block.get("seed"),
            amplitudes=None if amps is None else tuple(amps),
        )
        return PolyRegressionSpec(noise=noise, **params)
    except (TypeError, DomainError) as e:
        raise ConfigError(f"Invalid {kind.key} parameters: {e}")


def problem_spec_to_dict(spec: ProblemSpec) -> Dict[str, Any]:
    """Inverse of problem_spec_from_dict."""
    out: Dict[str, Any] = {"kind": spec.kind.key}
    if isinstance(spec, PolyRegressionSpec):
        out.update(asdict(spec))
        noise = out["noise"]
        if noise["amplitudes"] is None:
            del noise["amplitudes"]
        else:
            noise["amplitudes"] = list(noise["amplitudes"])
    return out

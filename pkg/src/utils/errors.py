"""
Exception types shared by services and the controller.
"""
from typing import Optional


class DomainError(ValueError):
    """Input outside the domain of an operation (negative dt, bad state, ...)."""


class HorizonError(ValueError):
    """Time beyond the horizon a dilation was built for."""


class ConfigError(ValueError):
    """Experiment configuration is malformed or fails validation."""


class ConvergenceError(ArithmeticError):
    """Fixed-point iteration did not reach its tolerance."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class RunFailure(RuntimeError):
    """A run aborted; carries the optimiser time of the failing step."""

    def __init__(self, message: str, time: float, seed: Optional[int] = None):
        super().__init__(f"{message} at t={time:.6g}")
        self.time = time
        self.seed = seed

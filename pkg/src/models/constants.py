"""
Enumerations and constants shared across the package.
This module centralizes the catalogue names that appear in experiment configs.
"""
from enum import Enum


# Index space used by both built-in problems
INDEX_LO = -1.0
INDEX_HI = 1.0

# Countable-state jump process: default exponential clock rate
COUNTABLE_DEFAULT_RATE = 1.0

# Karhunen-Loeve coefficients c_j = GRF_SCALE / (GRF_OFFSET + (pi j)^GRF_EXPONENT)
GRF_SCALE = 10.0
GRF_OFFSET = 1000.0
GRF_EXPONENT = 1.5


class _Catalogue(Enum):
    """Enum whose value is (config key, display label)."""

    @property
    def key(self) -> str:
        return self.value[0]

    @property
    def label(self) -> str:
        return self.value[1]

    @classmethod
    def from_key(cls, key: str):
        """Look up a member by its config key."""
        for member in cls:
            if member.key == key:
                return member
        valid = ", ".join(m.key for m in cls)
        raise ValueError(f"Unknown {cls.__name__} '{key}'. Expected one of: {valid}")


class ProcessKind(_Catalogue):
    """Index process families."""
    JUMP_UNIFORM = ("jump_uniform", "Markov pure jump")
    REFLECTED_BROWNIAN = ("reflected_brownian", "Reflected Brownian motion")
    FINITE_JUMP = ("finite_jump", "Finite-state jump")
    COUNTABLE_JUMP = ("countable_jump", "Countable-state jump")
    PRODUCT = ("product", "Product process")


class DilationKind(_Catalogue):
    """Clock maps turning optimiser time into index-process time."""
    CONSTANT = ("constant", "Constant learning rate")
    PIECEWISE = ("piecewise", "Piecewise from learning-rate sequence")
    SMOOTH = ("smooth", "Smooth from speed function")


class MuFamily(_Catalogue):
    """Closed catalogue of speed functions mu for smooth dilations."""
    POWER_LOG = ("power_log", "c * log(t + 2)^p")
    AFFINE = ("affine", "a * t + b")


class IntegratorKind(_Catalogue):
    """Gradient-flow integrators."""
    EXPLICIT_EULER = ("explicit_euler", "Forward Euler")
    IMPLICIT_MIDPOINT = ("implicit_midpoint", "Implicit midpoint")


class MidpointSolver(_Catalogue):
    """How the implicit midpoint equation is solved."""
    AUTO = ("auto", "Linear solve when the gradient is affine")
    FIXED_POINT = ("fixed_point", "Fixed-point iteration")
    LINEAR = ("linear", "Closed-form linear solve")


class MethodKind(_Catalogue):
    """Optimisation methods available to experiment configs."""
    SGD_EULER = ("sgd_euler", "SGD")
    SGD_MIDPOINT = ("sgd_midpoint", "SGD implicit")
    SGPC = ("sgpc", "SGPC")
    SGPD = ("sgpd", "SGPD")


class ProblemKind(_Catalogue):
    """Built-in optimisation problems."""
    QUADRATIC_TOY = ("toy", "Quadratic cartoon")
    POLY_REGRESSION = ("poly_regression", "Polynomial regression")

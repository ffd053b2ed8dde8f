"""
Utils package - Utility functions and exception types.
"""
from .validators import Validators
from .formatters import Formatters
from .errors import ConfigError, ConvergenceError, DomainError, HorizonError, RunFailure

__all__ = ["Validators", "Formatters", "ConfigError", "ConvergenceError", "DomainError", "HorizonError", "RunFailure"]

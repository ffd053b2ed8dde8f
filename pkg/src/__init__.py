"""
Source package for the Stochastic Gradient Process Lab.
"""
__version__ = "1.0"
__all__ = ["models", "services", "controllers", "utils"]

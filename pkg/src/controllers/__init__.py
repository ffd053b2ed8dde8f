"""
Controllers package - Application logic.
"""
from .app_controller import ExperimentController

__all__ = ["ExperimentController"]

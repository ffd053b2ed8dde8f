"""
Services package - Samplers, problems, integrators and the experiment runner.
"""
from .index_processes import IndexProcessSampler
from .diagnostics import Diagnostics
from .method_registry import MethodRegistry
from .experiment_file_handler import ExperimentFileHandler

__all__ = ["IndexProcessSampler", "Diagnostics", "MethodRegistry", "ExperimentFileHandler"]

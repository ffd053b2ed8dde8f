"""
Models package - Data structures and constants.
"""
from .constants import ProcessKind, DilationKind, IntegratorKind, MethodKind, ProblemKind
from .index_process import IndexPath, index_spec_from_dict
from .run import IntegratorSpec, RunConfig, Trajectory
from .experiment import EnsembleSummary, ExperimentConfig, MethodBlock, RunResult

__all__ = [
    "ProcessKind", "DilationKind", "IntegratorKind", "MethodKind", "ProblemKind",
    "IndexPath", "index_spec_from_dict", "IntegratorSpec", "RunConfig", "Trajectory",
    "EnsembleSummary", "ExperimentConfig", "MethodBlock", "RunResult",
]

"""
Optimisation methods available to experiment configs.

Every method turns its config block into a RunConfig and runs an ensemble of seeds:
- sgd_euler      discrete SGD, forward Euler, learning rate h
- sgd_midpoint   discrete SGD with the implicit midpoint update
- sgpc           stochastic gradient process, constant learning rate eps
- sgpd           stochastic gradient process on a decreasing-rate dilation

New methods plug in through MethodRegistry.register.
"""
import logging
from abc import ABC, abstractmethod
from typing import Any, Dict, List, Optional

from models.constants import IntegratorKind, MethodKind, MidpointSolver, ProcessKind
from models.experiment import ExperimentConfig, MethodBlock
from models.index_process import JumpUniformSpec, index_spec_from_dict
from models.run import IntegratorSpec, RunConfig, Trajectory
from services.flow import run_sgd_ensemble, run_sgp_ensemble
from services.schedules import ConstantDilation, SmoothDilation, dilation_from_dict
from utils.errors import ConfigError, DomainError

logger = logging.getLogger(__name__)

# keys every method block may carry besides its own
COMMON_KEYS = {"method", "label", "batch_size", "index_init", "theta0"}


def integrator_from_dict(data: Optional[Dict[str, Any]], default: IntegratorKind) -> IntegratorSpec:
    """{"kind": "implicit_midpoint", "solver": "fixed_point", "tol": 1e-10, "max_iter": 100}."""
    if data is None:
        return IntegratorSpec(kind=default)
    if not isinstance(data, dict):
        raise ConfigError(f"Integrator block must be a mapping, got {data!r}")
    unknown = set(data) - {"kind", "tol", "max_iter", "solver"}
    if unknown:
        raise ConfigError(f"Unknown integrator keys: {sorted(unknown)}")
    try:
        kwargs: Dict[str, Any] = {"kind": IntegratorKind.from_key(data.get("kind", default.key))}
        if "solver" in data:
            kwargs["solver"] = MidpointSolver.from_key(data["solver"])
        if "tol" in data:
            kwargs["tol"] = float(data["tol"])
        if "max_iter" in data:
            kwargs["max_iter"] = int(data["max_iter"])
        return IntegratorSpec(**kwargs)
    except (ValueError, TypeError) as e:
        raise ConfigError(f"Invalid integrator block {data}: {e}")


# ============================================================================
# ABSTRACT BASE CLASS FOR ALL METHODS
# ============================================================================

class OptimisationMethod(ABC):
    """A row type of the run matrix."""

    kind: MethodKind
    description: str = ""
    own_keys: frozenset = frozenset()

    def check_keys(self, block: MethodBlock):
        unknown = set(block.params) - self.own_keys - COMMON_KEYS
        if unknown:
            raise ConfigError(f"Unknown keys for {self.kind.key} method '{block.label}': {sorted(unknown)}")

    def build_config(self, block: MethodBlock, experiment: ExperimentConfig, problem) -> RunConfig:
        """Validate the block against the run preconditions and assemble its RunConfig."""
        self.check_keys(block)
        params = block.params
        try:
            return RunConfig(
                problem=problem,
                index=self._index(params),
                dilation=self._dilation(params, experiment),
                integrator=self._integrator(params),
                horizon=experiment.horizon,
                step=experiment.step,
                index_substep=params.get("index_substep", experiment.index_substep),
                batch_size=int(params.get("batch_size", experiment.batch_size)),
                theta0=params.get("theta0", experiment.theta0),
                index_init=params.get("index_init", experiment.index_init),
                record_every=experiment.record_every,
            )
        except DomainError as e:
            raise ConfigError(f"Method '{block.label}': {e}")

    @abstractmethod
    def run(self, config: RunConfig, seeds: List[int]) -> List[Trajectory]:
        """Run every seed of the ensemble."""

    @abstractmethod
    def parameter_text(self, block: MethodBlock, experiment: ExperimentConfig) -> str:
        """Parameters column of the summary table."""

    def _index(self, params: Dict[str, Any]):
        return index_spec_from_dict(params["index"]) if "index" in params else JumpUniformSpec(rate=0.0)

    def _dilation(self, params: Dict[str, Any], experiment: ExperimentConfig):
        return ConstantDilation(experiment.step)

    def _integrator(self, params: Dict[str, Any]) -> IntegratorSpec:
        return integrator_from_dict(params.get("integrator"), IntegratorKind.IMPLICIT_MIDPOINT)


# ============================================================================
# BUILT-IN METHODS
# ============================================================================

class SGDEulerMethod(OptimisationMethod):
    kind = MethodKind.SGD_EULER
    description = "Discrete SGD with i.i.d. samples and forward Euler steps"
    own_keys = frozenset({"index"})

    def _integrator(self, params):
        return IntegratorSpec.euler()

    def run(self, config, seeds):
        return run_sgd_ensemble(config, seeds)

    def parameter_text(self, block, experiment):
        return f"eta = {experiment.step:g}"


class SGDMidpointMethod(SGDEulerMethod):
    kind = MethodKind.SGD_MIDPOINT
    description = "Discrete SGD with the implicit midpoint update"
    own_keys = frozenset({"index", "integrator"})

    def _integrator(self, params):
        spec = integrator_from_dict(params.get("integrator"), IntegratorKind.IMPLICIT_MIDPOINT)
        if spec.kind is not IntegratorKind.IMPLICIT_MIDPOINT:
            raise ConfigError("sgd_midpoint requires the implicit_midpoint integrator")
        return spec


class SGPCMethod(OptimisationMethod):
    kind = MethodKind.SGPC
    description = "Stochastic gradient process with constant learning rate"
    own_keys = frozenset({"index", "epsilon", "integrator", "index_substep"})

    def _index(self, params):
        if "index" not in params:
            raise ConfigError(f"{self.kind.key} needs an 'index' block")
        index = index_spec_from_dict(params["index"])
        if index.kind is ProcessKind.COUNTABLE_JUMP:
            raise ConfigError("countable_jump has no embedding in the data space and cannot drive the flow")
        return index

    def _dilation(self, params, experiment):
        return ConstantDilation(float(params.get("epsilon", 1.0)))

    def run(self, config, seeds):
        return run_sgp_ensemble(config, seeds)

    def parameter_text(self, block, experiment):
        index = self._index(block.params)
        if index.kind is ProcessKind.REFLECTED_BROWNIAN:
            text = f"sigma = {index.sigma:g}"
        elif index.kind is ProcessKind.FINITE_JUMP:
            text = f"lambda = {index.rate:g}, N = {index.n_states}"
        else:
            text = f"lambda = {index.rate:g}"
        eps = block.params.get("epsilon", 1.0)
        return text if eps == 1.0 else f"{text}, eps = {eps:g}"


class SGPDMethod(SGPCMethod):
    kind = MethodKind.SGPD
    description = "Stochastic gradient process with decreasing learning rate"
    own_keys = frozenset({"index", "dilation", "integrator", "index_substep"})

    def _dilation(self, params, experiment):
        if "dilation" not in params:
            raise ConfigError(f"{self.kind.key} needs a 'dilation' block")
        dilation = dilation_from_dict(params["dilation"], horizon=experiment.horizon, default_step=experiment.step)
        if isinstance(dilation, SmoothDilation) and not dilation.admissibility().admissible():
            logger.warning(f"Speed function {dilation!r} fails the growth conditions on mu")
        return dilation

    def parameter_text(self, block, experiment):
        dilation = block.params.get("dilation", {})
        return f"{SGPCMethod.parameter_text(self, block, experiment)}, beta: {dilation.get('kind', '?')}"


# ============================================================================
# METHOD REGISTRY
# ============================================================================

class MethodRegistry:
    """Central registry of optimisation methods, keyed by config name."""

    def __init__(self):
        self.methods: Dict[str, OptimisationMethod] = {}
        self._register_default_methods()

    def _register_default_methods(self):
        for method in (SGDEulerMethod(), SGDMidpointMethod(), SGPCMethod(), SGPDMethod()):
            self.register(method.kind.key, method)
        logger.debug("Default methods registered")

    def register(self, method_id: str, method: OptimisationMethod) -> None:
        self.methods[method_id] = method
        logger.debug(f"Registered method: {method_id} ({method.description})")

    def unregister(self, method_id: str) -> bool:
        if method_id in self.methods:
            del self.methods[method_id]
            return True
        return False

    def get_method(self, method_id: str) -> OptimisationMethod:
        if method_id not in self.methods:
            raise ConfigError(f"Unknown method '{method_id}'. Expected one of: {', '.join(self.methods)}")
        return self.methods[method_id]

    def list_methods(self) -> Dict[str, str]:
        return {method_id: method.description for method_id, method in self.methods.items()}

    def build_config(self, block: MethodBlock, experiment: ExperimentConfig, problem) -> RunConfig:
        return self.get_method(block.method.key).build_config(block, experiment, problem)

    def execute(self, block: MethodBlock, config: RunConfig, seeds: List[int]) -> List[Trajectory]:
        return self.get_method(block.method.key).run(config, seeds)

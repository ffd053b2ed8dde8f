"""
Experiment config file handler (.json).

Experiment documents are plain, indented JSON with a versioned schema:

    {
      "schema_version": 1,
      "name": "toy_sgpc",
      "problem": {"kind": "toy"},
      "methods": [{"method": "sgpc", "label": "MJP 1", "index": {"kind": "jump_uniform", "rate": 1}}],
      "runs": 10, "steps": 1000, "step": 0.01, "master_seed": 7
    }

Unknown keys are rejected at every level.
"""
import copy
import json
import logging
import os
from typing import Any, Dict, Optional

from config.settings import EVAL_POINTS, OUTPUT_DIR, SCHEMA_VERSION
from models.constants import MethodKind, ProblemKind
from models.experiment import ExperimentConfig, MethodBlock
from models.index_process import STATIONARY
from models.problem import problem_spec_from_dict
from services.method_registry import MethodRegistry
from services.problems import build_problem
from utils.errors import ConfigError
from utils.validators import Validators

logger = logging.getLogger(__name__)

TOP_LEVEL_KEYS = {
    "schema_version", "name", "problem", "methods", "runs", "horizon", "steps", "step",
    "master_seed", "output_dir", "record_every", "theta0", "index_init", "index_substep",
    "batch_size", "eval_points", "write_trajectories",
}
OUTPUT_DIR_ENV = "SGP_OUTPUT_DIR"


class ExperimentFileHandler:
    """Loads, validates and saves experiment documents."""

    FILE_EXTENSION = ".json"

    @staticmethod
    def load_experiment(filepath: str, output_dir: Optional[str] = None) -> ExperimentConfig:
        """Read and validate an experiment file.

        The output directory resolves as: output_dir argument, then $SGP_OUTPUT_DIR,
        then the document's output_dir, then the default results folder.
        """
        try:
            with open(filepath, "r", encoding="utf-8") as f:
                data = json.load(f)
        except FileNotFoundError:
            raise ConfigError(f"Experiment file not found: {filepath}")
        except json.JSONDecodeError as e:
            raise ConfigError(f"{filepath} is not valid JSON: {e}")
        except OSError as e:
            raise ConfigError(f"Could not read {filepath}: {e}")

        default_name = os.path.splitext(os.path.basename(filepath))[0]
        config = ExperimentFileHandler.parse_experiment(data, default_name=default_name, output_dir=output_dir)
        logger.info(f"Experiment '{config.name}' loaded from {filepath}: {len(config.methods)} methods x {config.runs} runs")
        return config

    @staticmethod
    def parse_experiment(data: Any, default_name: str = "experiment", output_dir: Optional[str] = None) -> ExperimentConfig:
        """Validate an already decoded document and build its ExperimentConfig."""
        if not isinstance(data, dict):
            raise ConfigError("Experiment document must be a JSON object")
        data = copy.deepcopy(data)

        unknown = set(data) - TOP_LEVEL_KEYS
        if unknown:
            raise ConfigError(f"Unknown top-level keys: {sorted(unknown)}")
        version = data.get("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ConfigError(f"Unsupported schema_version {version}; this build reads version {SCHEMA_VERSION}")
        for key in ("problem", "methods", "runs", "step", "master_seed"):
            if key not in data:
                raise ConfigError(f"Missing required key '{key}'")

        ExperimentFileHandler._resolve_horizon(data)
        ok, message = Validators.validate_all(data)
        if not ok:
            raise ConfigError(message)

        problem_block = ExperimentFileHandler._resolve_problem(data["problem"], data["master_seed"])
        if not isinstance(data["methods"], list) or not data["methods"]:
            raise ConfigError("'methods' must be a non-empty list")

        try:
            config = ExperimentConfig(
                name=str(data.get("name", default_name)),
                problem=problem_block,
                methods=[ExperimentFileHandler._method_block(b) for b in data["methods"]],
                runs=int(data["runs"]),
                horizon=float(data["horizon"]),
                step=float(data["step"]),
                master_seed=int(data["master_seed"]),
                output_dir=ExperimentFileHandler.resolve_output_dir(output_dir, data.get("output_dir")),
                record_every=int(data.get("record_every", 1)),
                theta0=data.get("theta0", 0.0),
                index_init=data.get("index_init", STATIONARY),
                index_substep=data.get("index_substep"),
                batch_size=int(data.get("batch_size", 1)),
                eval_points=int(data.get("eval_points", EVAL_POINTS)),
                write_trajectories=bool(data.get("write_trajectories", False)),
                schema_version=version,
            )
        except ValueError as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(str(e))

        ExperimentFileHandler.validate_methods(config)
        return config

    @staticmethod
    def validate_methods(config: ExperimentConfig, registry: Optional[MethodRegistry] = None):
        """Build every method's run config once so bad parameters fail before any run starts."""
        registry = registry or MethodRegistry()
        problem = build_problem(problem_spec_from_dict(config.problem))
        for block in config.methods:
            registry.build_config(block, config, problem)

    @staticmethod
    def resolve_output_dir(cli_value: Optional[str], config_value: Optional[str]) -> str:
        for candidate in (cli_value, os.environ.get(OUTPUT_DIR_ENV), config_value):
            if candidate:
                return str(candidate)
        return OUTPUT_DIR

    @staticmethod
    def save_experiment(config: ExperimentConfig, filepath: str) -> bool:
        """Write the resolved document next to the outputs it produced."""
        try:
            with open(filepath, "w", encoding="utf-8", newline="\n") as f:
                json.dump(ExperimentFileHandler.to_dict(config), f, indent=2, sort_keys=True, ensure_ascii=False)
                f.write("\n")
            logger.info(f"Resolved experiment saved to {filepath}")
            return True
        except OSError as e:
            logger.error(f"Error saving experiment to {filepath}: {e}")
            return False

    @staticmethod
    def to_dict(config: ExperimentConfig) -> Dict[str, Any]:
        methods = []
        for block in config.methods:
            entry = {"method": block.method.key, "label": block.label}
            entry.update(block.params)
            methods.append(entry)
        out = {
            "schema_version": config.schema_version,
            "name": config.name,
            "problem": config.problem,
            "methods": methods,
            "runs": config.runs,
            "horizon": config.horizon,
            "step": config.step,
            "master_seed": config.master_seed,
            "record_every": config.record_every,
            "theta0": config.theta0,
            "index_init": config.index_init,
            "batch_size": config.batch_size,
            "eval_points": config.eval_points,
            "write_trajectories": config.write_trajectories,
        }
        if config.index_substep is not None:
            out["index_substep"] = config.index_substep
        return out

    # -- helpers ----------------------------------------------------------------

    @staticmethod
    def _resolve_horizon(data: Dict[str, Any]):
        """'steps' is shorthand for horizon = steps * step."""
        if "steps" in data:
            if not Validators.validate_positive_int(data["steps"], "steps"):
                raise ConfigError("'steps' must be an integer >= 1")
            if not Validators.validate_positive_number(data["step"], "step"):
                raise ConfigError("'step' must be a positive number")
            horizon = data["steps"] * data["step"]
            if "horizon" in data and abs(data["horizon"] - horizon) > 1e-9 * horizon:
                raise ConfigError(f"'horizon' {data['horizon']} disagrees with steps * step = {horizon}")
            data["horizon"] = horizon
            del data["steps"]
        elif "horizon" not in data:
            raise ConfigError("Give either 'horizon' or 'steps'")

    @staticmethod
    def _resolve_problem(block: Any, master_seed: int) -> Dict[str, Any]:
        """Validate the problem block; a regression without a noise seed takes the master seed."""
        problem_spec_from_dict(block)
        block = copy.deepcopy(block)
        if block["kind"] == ProblemKind.POLY_REGRESSION.key:
            noise = block.setdefault("noise", {})
            if "amplitudes" not in noise and noise.get("seed") is None:
                noise["seed"] = master_seed
        return block

    @staticmethod
    def _method_block(block: Any) -> MethodBlock:
        if not isinstance(block, dict) or "method" not in block:
            raise ConfigError(f"Method block needs a 'method' key: {block!r}")
        try:
            kind = MethodKind.from_key(block["method"])
        except ValueError as e:
            raise ConfigError(str(e))
        params = {k: v for k, v in block.items() if k not in ("method", "label")}
        return MethodBlock(method=kind, label=str(block.get("label", kind.label)), params=params)

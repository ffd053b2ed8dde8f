"""
Precondition checks for experiment documents.
"""
import logging
import numbers
from typing import Any, Dict, Tuple

logger = logging.getLogger(__name__)


class Validators:
    """Input validation functions."""

    @staticmethod
    def validate_positive_int(value: Any, name: str) -> bool:
        ok = isinstance(value, numbers.Integral) and not isinstance(value, bool) and value >= 1
        if not ok:
            logger.warning(f"{name} validation failed: {value!r} is not a positive integer")
        return ok

    @staticmethod
    def validate_positive_number(value: Any, name: str) -> bool:
        ok = isinstance(value, numbers.Real) and not isinstance(value, bool) and value > 0 and value < float("inf")
        if not ok:
            logger.warning(f"{name} validation failed: {value!r} is not a positive finite number")
        return ok

    @staticmethod
    def validate_seed(value: Any) -> bool:
        """Seeds feed numpy's SeedSequence, which needs nonnegative integers."""
        ok = isinstance(value, numbers.Integral) and not isinstance(value, bool) and value >= 0
        if not ok:
            logger.warning(f"Seed validation failed: {value!r}")
        return ok

    @staticmethod
    def validate_all(data: Dict[str, Any]) -> Tuple[bool, str]:
        """Check the numeric top-level entries of an experiment document."""
        if not Validators.validate_positive_int(data.get("runs"), "runs"):
            return (False, "'runs' must be an integer >= 1")

        if not Validators.validate_positive_number(data.get("step"), "step"):
            return (False, "'step' must be a positive number")

        if not Validators.validate_positive_number(data.get("horizon"), "horizon"):
            return (False, "'horizon' (or 'steps') must give a positive horizon")

        if not Validators.validate_seed(data.get("master_seed")):
            return (False, "'master_seed' must be a nonnegative integer")

        for key in ("record_every", "batch_size", "eval_points"):
            if key in data and not Validators.validate_positive_int(data[key], key):
                return (False, f"'{key}' must be an integer >= 1")

        if "index_substep" in data and data["index_substep"] is not None:
            if not Validators.validate_positive_number(data["index_substep"], "index_substep"):
                return (False, "'index_substep' must be a positive number")

        return (True, "All inputs valid")

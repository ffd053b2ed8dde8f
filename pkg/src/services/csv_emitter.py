"""
CSV emission with a fixed, round-trippable number format.
"""
import logging
import os
from typing import Iterable, Mapping, Optional, Sequence, Union

import pandas as pd

from config.settings import CSV_FLOAT_FORMAT
from utils.errors import DomainError

logger = logging.getLogger(__name__)

Records = Union[pd.DataFrame, Iterable[Mapping]]


def emit_csv(records: Records, path: str, columns: Optional[Sequence[str]] = None) -> str:
    """Header row then one record per line, floats at 17 significant digits, LF endings.

    columns fixes the column order and is required to write a header for an empty
    record list. Missing values are written as empty fields.
    """
    frame = records if isinstance(records, pd.DataFrame) else pd.DataFrame(list(records))
    if columns is not None:
        missing = [c for c in columns if c not in frame.columns and len(frame)]
        if missing:
            raise DomainError(f"Records lack columns {missing} for {path}")
        frame = frame.reindex(columns=list(columns))
    elif frame.columns.empty:
        raise DomainError(f"No records and no columns given for {path}")

    try:
        parent = os.path.dirname(os.path.abspath(path))
        os.makedirs(parent, exist_ok=True)
        frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    except OSError as e:
        logger.error(f"Could not write {path}: {e}")
        raise OSError(f"Could not write {path}: {e}") from e

    logger.debug(f"Wrote {len(frame)} records to {path}")
    return path


def read_csv(path: str) -> pd.DataFrame:
    """Parse a file written by emit_csv without losing float digits."""
    try:
        return pd.read_csv(path, float_precision="round_trip")
    except OSError as e:
        raise OSError(f"Could not read {path}: {e}") from e

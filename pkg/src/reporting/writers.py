"""Atomic file writers for tables, JSON documents and figures"""
import json
import math
import os
import tempfile
from contextlib import contextmanager
from enum import Enum
from pathlib import Path
from typing import Any, Iterator

import numpy as np
import pandas as pd

from src.core.exceptions import ReportWriteError
from src.core.logging_config import get_logger

logger = get_logger(__name__)

FLOAT_FORMAT = '%.10g'


def ensure_directory(path) -> Path:
    directory = Path(path)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ReportWriteError(str(directory), f"cannot create directory: {e.strerror or e}") from e
    if not os.access(directory, os.W_OK):
        raise ReportWriteError(str(directory), "directory is not writable")
    return directory


@contextmanager
def atomic_path(path) -> Iterator[Path]:
    """
    Yield a temporary path next to ``path`` and move it into place on success

    The final path is either untouched or complete; the temporary file is
    removed when the body raises.

    Raises:
        ReportWriteError: If the temporary file cannot be created or moved
    """
    target = Path(path)
    ensure_directory(target.parent)
    try:
        handle, temporary = tempfile.mkstemp(prefix=f'.{target.name}.', suffix='.tmp', dir=target.parent)
        os.close(handle)
    except OSError as e:
        raise ReportWriteError(str(target), f"cannot create temporary file: {e.strerror or e}") from e
    temporary = Path(temporary)
    try:
        yield temporary
        os.replace(temporary, target)
    except OSError as e:
        temporary.unlink(missing_ok=True)
        raise ReportWriteError(str(target), e.strerror or str(e)) from e
    except BaseException:
        temporary.unlink(missing_ok=True)
        raise
    logger.debug(f"Wrote {target}")


def write_table(frame: pd.DataFrame, path, delimiter: str = ',') -> Path:
    """Write a table with its column order and a fixed float format"""
    with atomic_path(path) as temporary:
        frame.to_csv(temporary, sep=delimiter, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    return Path(path)


def to_jsonable(value: Any) -> Any:
    """Convert numpy, pandas and enum values to JSON types; NaN and infinities become null"""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, pd.DataFrame):
        return [to_jsonable(row) for row in value.to_dict(orient='records')]
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if value is None or isinstance(value, str):
        return value
    return str(value)


def write_json(document: Any, path) -> Path:
    """Write a JSON document with sorted keys"""
    text = json.dumps(to_jsonable(document), indent=2, sort_keys=True, allow_nan=False)
    with atomic_path(path) as temporary:
        temporary.write_text(text + '\n', encoding='utf-8')
    return Path(path)

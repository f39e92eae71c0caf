"""JSON persistence for records, certificates and summaries."""
import logging
from pathlib import Path
from typing import Any, Union

import numpy as np
import orjson

logger = logging.getLogger(__name__)

JSON_OPTIONS = orjson.OPT_INDENT_2 | orjson.OPT_SERIALIZE_NUMPY | orjson.OPT_NON_STR_KEYS


def _default(value: Any) -> Any:
    if isinstance(value, (np.integer, np.floating, np.bool_)):
        return value.item()
    if isinstance(value, (set, frozenset)):
        return sorted(value)
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def dumps(data: Any) -> bytes:
    return orjson.dumps(data, default=_default, option=JSON_OPTIONS)


def write_json(data: Any, path: Union[str, Path]) -> Path:
    """Write ``data`` as JSON through a .tmp sibling and an atomic replace."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    temp_file = path.with_suffix(path.suffix + ".tmp")
    try:
        with open(temp_file, "wb") as f:
            f.write(dumps(data))
        temp_file.replace(path)
    except OSError as e:
        logger.error(f"Failed to write {path}: {e}")
        raise
    return path


def read_json(path: Union[str, Path]) -> Any:
    path = Path(path)
    try:
        with open(path, "rb") as f:
            return orjson.loads(f.read())
    except orjson.JSONDecodeError as e:
        logger.error(f"Error decoding JSON from {path}: {e}")
        raise

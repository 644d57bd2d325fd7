"""
CSV and JSON output helpers.

Floats are written with repr, which round-trips exactly.
"""

import csv
import json
import logging
import os
from typing import Any, Dict, List, Sequence

import numpy as np

logger = logging.getLogger(__name__)


def _cell(value: Any) -> Any:
    if isinstance(value, (np.floating, float)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return int(value)
    return value


def _ensure_parent(path: str):
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)


def write_rows(path: str, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    """Write a header and rows to path; returns the path."""
    _ensure_parent(path)
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    logger.info("wrote %d rows to %s", len(rows), path)
    return path


def read_rows(path: str) -> List[Dict[str, str]]:
    """Rows of a CSV file as dicts keyed by the header."""
    with open(path, 'r', newline='') as f:
        return list(csv.DictReader(f))


def _default(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    raise TypeError(f"cannot serialize {type(value).__name__}")


def write_json(path: str, data: Dict[str, Any]) -> str:
    _ensure_parent(path)
    with open(path, 'w') as f:
        json.dump(data, f, indent=2, default=_default)
    logger.info("wrote %s", path)
    return path

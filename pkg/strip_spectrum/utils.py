"""
Artifact Writers

This module writes the files a run leaves in its output directory.

Functions:
    - sanitize: replace non-finite floats by None and numpy scalars by Python ones
    - write_json: deterministic JSON report (sorted keys, fixed float repr)
    - write_csv: plot-ready CSV from row dictionaries
    - write_quadrature: x1, x2, weight table of a quadrature rule
    - write_matrix: coordinate text dump of a sparse matrix
    - write_error_report: ErrorReport JSON for a failed run

Features:
    - Byte-identical output for identical inputs
    - Every JSON artifact carries schema_version through the report models
"""

import csv
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel

from .config import settings
from .models import ErrorReport
from .spectral.models import QuadratureRule

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def sanitize(value: Any) -> Any:
    """
    Recursively convert a report payload into JSON-safe Python values.

    Non-finite floats become None; numpy scalars and arrays become Python
    numbers and lists; tuples become lists; dictionary keys become strings.
    """
    if isinstance(value, BaseModel):
        return sanitize(value.model_dump())
    if isinstance(value, dict):
        return {str(k): sanitize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [sanitize(v) for v in value]
    if isinstance(value, np.ndarray):
        return [sanitize(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def ensure_directory(path: PathLike) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_json(path: PathLike, payload: Any) -> Path:
    """Write a report as indented JSON with sorted keys."""
    path = Path(path)
    ensure_directory(path.parent)
    text = json.dumps(sanitize(payload), indent=2, sort_keys=True, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8")
    logger.info(f"Wrote {path}")
    return path


def write_csv(path: PathLike, rows: Sequence[Dict[str, Any]], fieldnames: Sequence[str]) -> Path:
    """Write row dictionaries as CSV; floats use repr so values round-trip."""
    path = Path(path)
    ensure_directory(path.parent)
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=list(fieldnames), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _cell(row.get(k)) for k in fieldnames})
    logger.info(f"Wrote {path} ({len(rows)} rows)")
    return path


def _cell(value: Any) -> Any:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    return "" if value is None else value


def write_quadrature(path: PathLike, rule: QuadratureRule) -> Path:
    """Write a quadrature rule as CSV columns x1, x2, weight."""
    path = Path(path)
    ensure_directory(path.parent)
    table = np.column_stack([rule.nodes, rule.weights]) if len(rule) else np.zeros((0, 3))
    np.savetxt(path, table, fmt="%.17g", delimiter=",", header="x1,x2,weight", comments="")
    logger.info(f"Wrote {path} ({len(rule)} nodes)")
    return path


def write_matrix(path: PathLike, coordinates: Iterable[Tuple[int, int, float]], shape: Tuple[int, int]) -> Path:
    """
    Coordinate text dump: a header line `rows cols nnz`, then one `i j value` line per entry.
    """
    path = Path(path)
    ensure_directory(path.parent)
    entries: List[Tuple[int, int, float]] = list(coordinates)
    with path.open("w", encoding="utf-8") as f:
        f.write(f"{shape[0]} {shape[1]} {len(entries)}\n")
        for i, j, v in entries:
            f.write(f"{i} {j} {float(v)!r}\n")
    logger.info(f"Wrote {path} ({len(entries)} entries)")
    return path


def write_error_report(out_dir: PathLike, command: str, error: BaseException, exit_code: int) -> Path:
    report = ErrorReport(
        command=command,
        error=type(error).__name__,
        details=str(error),
        exit_code=exit_code,
        schema_version=settings.schema_version,
    )
    return write_json(Path(out_dir) / "error.json", report)

"""
Storage: per-solve work directories and run artifacts.

Artifacts are plain files under an output directory: trajectory CSV, report
JSON, relaxed spec text and (optionally) the LP model.
"""
import json
import logging
import re
import shutil
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterator, Mapping, Optional

import numpy as np
import pandas as pd

from app.config import settings
from app.exceptions import DimensionError, HorizonError, ScenarioError
from app.models.signal import Signal

logger = logging.getLogger(__name__)

INPUT_COLUMN = re.compile(r"u\d+")


@contextmanager
def work_dir(keep: bool = False, root: Optional[str] = None, prefix: str = "stlrelax_") -> Iterator[Path]:
    """
    Yield a private temporary directory, removed afterwards unless keep is set.
    """
    base = root or settings.WORK_DIR or None
    if base:
        Path(base).mkdir(parents=True, exist_ok=True)
    path = Path(tempfile.mkdtemp(prefix=prefix, dir=base))
    try:
        yield path
    finally:
        if keep:
            logger.info(f"Keeping solver files in {path}")
        else:
            shutil.rmtree(path, ignore_errors=True)


def ensure_dir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def read_signal_csv(path, variables: Optional[Mapping[str, int]] = None) -> Signal:
    """
    Read a signal from CSV with header t,x1..xn. Input columns u1..um of a
    trajectory file are skipped.

    Args:
        path: CSV file.
        variables: Formula variable -> column position among the non-t columns.
            Defaults to the column names themselves.

    Returns:
        Signal with one row per non-t column.
    """
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ScenarioError(f"Could not read signal CSV {path}: {e}")
    if "t" not in frame.columns:
        raise DimensionError(f"Signal CSV {path} has no 't' column")
    frame = frame.sort_values("t")
    steps = frame["t"].to_numpy()
    if len(steps) == 0 or not np.array_equal(steps, np.arange(len(steps))):
        raise HorizonError(int(steps.max()) if len(steps) else -1, len(steps) - 1)
    columns = [c for c in frame.columns if c != "t" and not INPUT_COLUMN.fullmatch(str(c))]
    mapping = dict(variables) if variables else {name: i for i, name in enumerate(columns)}
    values = frame[columns].to_numpy(dtype=float).T
    return Signal(values, mapping)


def write_trajectory_csv(path, signal: Signal, inputs: np.ndarray) -> Path:
    """Write t,x1..xn,u1..um; the input columns are empty at the final step."""
    horizon = signal.horizon
    data: Dict[str, Any] = {"t": np.arange(horizon + 1)}
    for i in range(signal.dimension):
        data[f"x{i + 1}"] = signal.values[i]
    inputs = np.asarray(inputs, dtype=float).reshape(horizon, -1) if horizon else np.zeros((0, 0))
    for j in range(inputs.shape[1]):
        data[f"u{j + 1}"] = np.append(inputs[:, j], np.nan)
    path = Path(path)
    ensure_dir(path.parent)
    pd.DataFrame(data).to_csv(path, index=False)
    return path


def write_json(path, payload: Any) -> Path:
    path = Path(path)
    ensure_dir(path.parent)
    path.write_text(json.dumps(payload, indent=2, sort_keys=False) + "\n")
    return path


def write_text(path, text: str) -> Path:
    path = Path(path)
    ensure_dir(path.parent)
    path.write_text(text if text.endswith("\n") else text + "\n")
    return path

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional

import numpy as np

from app.exceptions import SolverError
from app.models.relaxation import RelaxationReport
from app.models.signal import Signal


class SolveStatus(str, Enum):
    OPTIMAL = "optimal"
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    TIMEOUT = "timeout"
    ERROR = "error"


@dataclass
class Solution:
    status: SolveStatus
    objective: Optional[float] = None
    values: Dict[int, float] = field(default_factory=dict)
    solve_time: float = 0.0
    backend: str = ""

    @property
    def has_values(self) -> bool:
        return bool(self.values)


@dataclass(frozen=True)
class BackendConfig:
    name: str = "cbc"
    executable: Optional[str] = None
    time_limit: float = 600.0
    mip_gap: float = 0.0
    threads: int = 1
    keep_files: bool = False
    work_dir: Optional[str] = None

    def __post_init__(self):
        if self.name not in ("cbc", "highs"):
            raise SolverError(f"Unsupported solver backend: {self.name}")
        if not self.time_limit > 0:
            raise SolverError(f"Time limit must be positive, got {self.time_limit}")
        if self.mip_gap < 0:
            raise SolverError(f"MIP gap must be non-negative, got {self.mip_gap}")


@dataclass
class SynthesisResult:
    """Decoded solver output for one objective, cross-checked against the monitor."""

    objective: str
    report: RelaxationReport
    inputs: np.ndarray
    signal: Signal
    solution: Solution
    theta: Optional[int] = None
    counts: Dict[str, int] = field(default_factory=dict)
    build_time: float = 0.0

    @property
    def solve_time(self) -> float:
        return self.solution.solve_time

"""Results of temporal-relaxation monitoring."""
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Tuple

from app.models.formula import Formula, Path, TimeInterval

FINALLY = "finally"
GLOBALLY = "globally"


@dataclass(frozen=True)
class CounterSeries:
    """Consecutive satisfaction (1) / violation (0) run lengths, forward (l) and backward (r)."""

    start: int
    l1: Tuple[int, ...]
    l0: Tuple[int, ...]
    r1: Tuple[int, ...]
    r0: Tuple[int, ...]

    def at(self, series: str, t: int) -> int:
        return getattr(self, series)[t - self.start]


@dataclass(frozen=True)
class SubtaskRelaxation:
    site: Path
    kind: str
    instant: int
    interval: TimeInterval
    tau_under: int
    tau_over: int
    removed: bool
    normalized: Fraction
    relaxed_interval: Optional[TimeInterval] = None

    @property
    def similarity(self) -> Fraction:
        """Overlap of the relaxed and original intervals; 0 once the subtask is removed."""
        if self.removed or self.relaxed_interval is None:
            return Fraction(0)
        return interval_similarity(self.relaxed_interval, self.interval)


@dataclass
class RelaxationReport:
    tau: Fraction
    subtasks: List[SubtaskRelaxation] = field(default_factory=list)
    relaxed_formula: Optional[Formula] = None

    @property
    def removed_sites(self) -> List[Path]:
        return [s.site for s in self.subtasks if s.removed]


def interval_similarity(first: TimeInterval, second: TimeInterval) -> Fraction:
    return Fraction(first.intersection_size(second), max(first.cardinality, second.cardinality))

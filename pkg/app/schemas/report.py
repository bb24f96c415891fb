"""Schemas for relaxation reports and pipeline responses."""
from fractions import Fraction
from typing import Dict, List, Optional

from pydantic import BaseModel, Field

from app.models.relaxation import RelaxationReport, SubtaskRelaxation


def fraction_text(value: Fraction) -> str:
    """Exact 'num/den' text; integers keep the '/1' so consumers can always split."""
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"


class SubtaskReport(BaseModel):
    site: List[int]
    kind: str
    instant: int
    interval: List[int]
    relaxed_interval: Optional[List[int]] = None
    tau_under: int
    tau_over: int
    removed: bool
    normalized: str
    normalized_value: float
    similarity: str

    @classmethod
    def from_entry(cls, entry: SubtaskRelaxation) -> "SubtaskReport":
        relaxed = entry.relaxed_interval
        return cls(
            site=list(entry.site),
            kind=entry.kind,
            instant=entry.instant,
            interval=[entry.interval.lo, entry.interval.hi],
            relaxed_interval=None if relaxed is None else [relaxed.lo, relaxed.hi],
            tau_under=entry.tau_under,
            tau_over=entry.tau_over,
            removed=entry.removed,
            normalized=fraction_text(entry.normalized),
            normalized_value=float(entry.normalized),
            similarity=fraction_text(entry.similarity),
        )


class RelaxationReportSchema(BaseModel):
    tau: str
    tau_value: float
    subtasks: List[SubtaskReport] = Field(default_factory=list)
    relaxed_spec: Optional[str] = None

    @classmethod
    def from_report(cls, report: RelaxationReport) -> "RelaxationReportSchema":
        from app.services.parser_service import to_text
        return cls(
            tau=fraction_text(report.tau),
            tau_value=float(report.tau),
            subtasks=[SubtaskReport.from_entry(e) for e in report.subtasks],
            relaxed_spec=None if report.relaxed_formula is None else to_text(report.relaxed_formula),
        )


class MonitorResponse(BaseModel):
    satisfied: bool
    space_robustness: float
    time_robustness_right: int
    time_robustness_left: int
    report: RelaxationReportSchema


class SynthesisResponse(BaseModel):
    objective: str
    status: str
    horizon: int
    objective_value: Optional[float] = None
    theta: Optional[int] = None
    solve_time: float = 0.0
    build_time: float = 0.0
    counts: Dict[str, int] = Field(default_factory=dict)
    inputs: List[List[float]] = Field(default_factory=list)
    states: List[List[float]] = Field(default_factory=list)
    report: RelaxationReportSchema


class CompareRow(BaseModel):
    objective: str
    tau: str
    tau_value: float
    theta: Optional[int] = None
    solve_time: float
    build_time: float
    variables: int
    integer_variables: int
    constraints: int
    relaxed_spec: Optional[str] = None


class CompareResponse(BaseModel):
    rows: List[CompareRow]
    relaxation_is_smallest: bool


class OracleResponse(BaseModel):
    tau: str
    tau_value: float
    inputs: List[List[float]]
    enumerated: int
    report: RelaxationReportSchema


class ExportResponse(BaseModel):
    lp: str
    counts: Dict[str, int]

from app.models.formula import (
    And,
    Finally,
    Globally,
    Not,
    Or,
    Pred,
    Predicate,
    RelaxationBounds,
    TimeInterval,
    Tolerances,
)
from app.models.milp import EncodingParams, MilpModel
from app.models.relaxation import RelaxationReport, SubtaskRelaxation
from app.models.signal import Signal
from app.models.solution import BackendConfig, Solution, SolveStatus, SynthesisResult
from app.models.system import LinearSystem

__all__ = [
    "And",
    "Finally",
    "Globally",
    "Not",
    "Or",
    "Pred",
    "Predicate",
    "RelaxationBounds",
    "TimeInterval",
    "Tolerances",
    "EncodingParams",
    "MilpModel",
    "RelaxationReport",
    "SubtaskRelaxation",
    "Signal",
    "BackendConfig",
    "Solution",
    "SolveStatus",
    "SynthesisResult",
    "LinearSystem",
]

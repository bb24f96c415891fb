"""Schemas for scenario files (JSON) and API requests."""
from typing import Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.config import settings

Bound = Tuple[Optional[float], Optional[float]]


class DynamicsSpec(BaseModel):
    """Linear dynamics given as matrices, or the planar double integrator."""
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    kind: Literal["linear", "double_integrator", "integrator"] = "linear"
    A: Optional[List[List[float]]] = None
    B: Optional[List[List[float]]] = None
    x0: Optional[List[float]] = None
    dt: float = Field(1.0, gt=0)
    dimension: int = Field(1, ge=1)  # integrator only
    state_bounds: Optional[List[Bound]] = None
    input_bounds: Optional[List[Bound]] = None
    input_limit: Optional[float] = Field(None, gt=0)  # symmetric input box for double_integrator / integrator

    @model_validator(mode="after")
    def check_matrices(self):
        if self.kind == "linear" and (self.A is None or self.B is None or self.x0 is None):
            raise ValueError("linear dynamics need A, B and x0")
        return self


class ToleranceSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    gamma_f: float = Field(default_factory=lambda: settings.GAMMA_F, gt=0)
    gamma_g: float = Field(default_factory=lambda: settings.GAMMA_G, gt=0, le=1)


class EncodingSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    big_m: float = Field(default_factory=lambda: settings.BIG_M, gt=0)
    eps: float = Field(default_factory=lambda: settings.EPSILON, gt=0)
    margin: float = Field(default_factory=lambda: settings.SATISFACTION_MARGIN, ge=0)
    tie_break_weight: float = Field(default_factory=lambda: settings.TIE_BREAK_WEIGHT, ge=0)


class BackendSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: Literal["cbc", "highs"] = Field(default_factory=lambda: settings.SOLVER_BACKEND)
    path: Optional[str] = None
    time_limit: float = Field(default_factory=lambda: settings.SOLVER_TIME_LIMIT, gt=0)
    mip_gap: float = Field(default_factory=lambda: settings.SOLVER_MIP_GAP, ge=0)
    threads: int = Field(default_factory=lambda: settings.SOLVER_THREADS, ge=1)
    keep_lp: bool = Field(default_factory=lambda: settings.KEEP_LP)


class OutputSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    directory: Optional[str] = None
    trajectory: str = "trajectory.csv"
    report: str = "report.json"
    relaxed_spec: str = "relaxed_spec.txt"
    lp: str = "model.lp"


Objective = Literal["relaxation", "time_robustness_right", "time_robustness_left"]


class ScenarioSchema(BaseModel):
    """One experiment: a specification, the system it constrains, and how to solve it."""
    model_config = ConfigDict(extra="forbid")

    name: str = "scenario"
    description: Optional[str] = None
    spec: str = Field(..., min_length=1)
    variables: Dict[str, int] = Field(default_factory=dict)
    regions: Dict[str, str] = Field(default_factory=dict)
    dynamics: Optional[DynamicsSpec] = None
    tolerances: ToleranceSpec = Field(default_factory=ToleranceSpec)
    horizon: Optional[float] = Field(None, ge=0)
    time_unit: Literal["steps", "seconds"] = "steps"
    objective: Objective = "relaxation"
    encoding: EncodingSpec = Field(default_factory=EncodingSpec)
    backend: BackendSpec = Field(default_factory=BackendSpec)
    input_grid: Optional[Union[List[float], List[List[float]]]] = None
    outputs: OutputSpec = Field(default_factory=OutputSpec)

    @field_validator("variables")
    @classmethod
    def check_variables(cls, v: Dict[str, int]) -> Dict[str, int]:
        for name, index in v.items():
            if index < 0:
                raise ValueError(f"variable '{name}' has negative state index {index}")
        return v

    @model_validator(mode="after")
    def check_units(self):
        if self.time_unit == "seconds" and self.dynamics is None:
            raise ValueError("time_unit 'seconds' needs dynamics.dt to convert bounds")
        return self


class SignalPayload(BaseModel):
    """Signal rows for the HTTP surface: columns named like the CSV header."""
    t: Optional[List[int]] = None
    columns: Dict[str, List[float]]


class MonitorRequest(BaseModel):
    scenario: ScenarioSchema
    signal: SignalPayload


class ScenarioRequest(BaseModel):
    scenario: ScenarioSchema
    objective: Optional[Objective] = None

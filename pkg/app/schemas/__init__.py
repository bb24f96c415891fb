"""Pydantic schemas"""
from app.schemas.scenario import ScenarioSchema, MonitorRequest, ScenarioRequest, SignalPayload
from app.schemas.report import (
    RelaxationReportSchema,
    MonitorResponse,
    SynthesisResponse,
    CompareResponse,
    OracleResponse,
    ExportResponse,
)

__all__ = [
    "ScenarioSchema",
    "MonitorRequest",
    "ScenarioRequest",
    "SignalPayload",
    "RelaxationReportSchema",
    "MonitorResponse",
    "SynthesisResponse",
    "CompareResponse",
    "OracleResponse",
    "ExportResponse",
]

from fastapi import APIRouter
import numpy as np

from app.exceptions import DimensionError, HorizonError
from app.models.signal import Signal
from app.schemas.report import MonitorResponse
from app.schemas.scenario import MonitorRequest, SignalPayload
from app.services.scenario_service import Scenario, ScenarioService

router = APIRouter()


def signal_from_payload(payload: SignalPayload, variables) -> Signal:
    """Columns keep their JSON order; scenario variables index into that order."""
    names = list(payload.columns)
    if not names:
        raise DimensionError("Signal has no columns")
    lengths = {len(values) for values in payload.columns.values()}
    if len(lengths) != 1:
        raise DimensionError(f"Signal columns have different lengths: {sorted(lengths)}")
    length = lengths.pop()
    if payload.t is not None and list(payload.t) != list(range(length)):
        raise HorizonError(max(payload.t, default=-1), length - 1)
    values = np.array([payload.columns[name] for name in names], dtype=float)
    mapping = dict(variables) if variables else {name: i for i, name in enumerate(names)}
    return Signal(values, mapping)


@router.post("/monitor", response_model=MonitorResponse)
def monitor(request: MonitorRequest):
    """Boolean satisfaction, robustness and temporal relaxation of a signal"""
    scenario = Scenario.from_schema(request.scenario)
    service = ScenarioService(scenario)
    variables = request.scenario.variables or None
    result = service.monitor(signal_from_payload(request.signal, variables))
    return service.monitor_response(result)

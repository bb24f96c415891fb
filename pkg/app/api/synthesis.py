from fastapi import APIRouter

from app.schemas.report import CompareResponse, ExportResponse, OracleResponse, SynthesisResponse
from app.schemas.scenario import ScenarioRequest
from app.services.scenario_service import Scenario, ScenarioService

router = APIRouter()


def _service(request: ScenarioRequest) -> ScenarioService:
    return ScenarioService(Scenario.from_schema(request.scenario))


@router.post("/synthesize", response_model=SynthesisResponse)
def synthesize(request: ScenarioRequest):
    """Solve the scenario's MILP and return the cross-validated trajectory"""
    service = _service(request)
    return service.synthesis_response(service.synthesize(request.objective))


@router.post("/compare", response_model=CompareResponse)
def compare(request: ScenarioRequest):
    """Solve under every objective and report each trajectory's relaxation"""
    service = _service(request)
    return service.compare_response(service.compare())


@router.post("/export-lp", response_model=ExportResponse)
def export_lp(request: ScenarioRequest):
    service = _service(request)
    return service.export_lp(request.objective)


@router.post("/oracle", response_model=OracleResponse)
def oracle(request: ScenarioRequest):
    """Brute-force minimum over the scenario's input grid"""
    service = _service(request)
    return service.oracle_response(service.oracle())

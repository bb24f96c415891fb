"""
Scenario loading and the end-to-end pipelines behind the CLI and the API:
monitor, synthesize, compare, export-lp and oracle.
"""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np
from pydantic import ValidationError

from app.config import settings
from app.exceptions import InfeasibleError, ScenarioError, SolutionInconsistencyError, SolverError
from app.models.formula import Formula, Tolerances
from app.models.milp import EncodingParams
from app.models.relaxation import RelaxationReport
from app.models.signal import Signal
from app.models.solution import BackendConfig, SolveStatus, SynthesisResult
from app.models.system import LinearSystem
from app.schemas.report import (
    CompareResponse,
    CompareRow,
    ExportResponse,
    MonitorResponse,
    OracleResponse,
    RelaxationReportSchema,
    SynthesisResponse,
    fraction_text,
)
from app.schemas.scenario import ScenarioSchema
from app.services import dynamics_service, monitor_service, oracle_service, solver_service, storage_service
from app.services.encoder_service import OBJECTIVES, RELAXATION, MilpEncoder
from app.services.fragment_service import required_horizon
from app.services.parser_service import parse, to_text

logger = logging.getLogger(__name__)

DOUBLE_INTEGRATOR_VARIABLES = {"x": 0, "vx": 1, "y": 2, "vy": 3}


def load_scenario(path: Union[str, Path]) -> ScenarioSchema:
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as e:
        raise ScenarioError(f"Cannot read scenario {path}: {e}")
    except json.JSONDecodeError as e:
        raise ScenarioError(f"Scenario {path} is not valid JSON: {e}")
    return validate_scenario(raw)


def validate_scenario(raw: dict) -> ScenarioSchema:
    try:
        return ScenarioSchema.model_validate(raw)
    except ValidationError as e:
        raise ScenarioError(f"Invalid scenario: {e}")


def build_system(spec) -> LinearSystem:
    if spec.kind == "double_integrator":
        return dynamics_service.double_integrator(
            spec.dt, spec.x0, input_limit=spec.input_limit or 2.2, state_bounds=spec.state_bounds
        )
    if spec.kind == "integrator":
        system = dynamics_service.integrator(spec.dimension, spec.x0, spec.input_limit, spec.dt)
        if spec.state_bounds is not None:
            system = LinearSystem.build(system.A, system.B, system.x0, spec.state_bounds,
                                        [(lo, hi) for lo, hi in zip(system.u_lo, system.u_hi)], spec.dt)
        return system
    return LinearSystem.build(spec.A, spec.B, spec.x0, spec.state_bounds, spec.input_bounds, spec.dt)


@dataclass
class Scenario:
    """A validated scenario with its formula parsed and units converted to steps."""

    schema: ScenarioSchema
    formula: Formula
    tolerances: Tolerances
    params: EncodingParams
    backend: BackendConfig
    variables: Dict[str, int]
    system: Optional[LinearSystem] = None
    horizon: Optional[int] = None
    output_dir: Path = field(default_factory=lambda: Path(settings.OUTPUT_DIR))

    @property
    def name(self) -> str:
        return self.schema.name

    @classmethod
    def from_schema(cls, schema: ScenarioSchema, out_dir: Optional[str] = None, keep_lp: Optional[bool] = None,
                    time_limit: Optional[float] = None, backend: Optional[str] = None) -> "Scenario":
        system = build_system(schema.dynamics) if schema.dynamics else None
        variables: Dict[str, int] = {}
        if schema.dynamics is not None and schema.dynamics.kind == "double_integrator":
            variables.update(DOUBLE_INTEGRATOR_VARIABLES)
        elif system is not None:
            variables.update({f"x{i + 1}": i for i in range(system.n)})
        variables.update(schema.variables)

        time_scale = schema.dynamics.dt if schema.time_unit == "seconds" else None
        formula = parse(schema.spec, schema.regions, time_scale=time_scale)
        if time_scale is not None:
            logger.info(f"Spec in steps (dt={time_scale}): {to_text(formula)}")

        tolerances = Tolerances(schema.tolerances.gamma_f, schema.tolerances.gamma_g)
        horizon = None
        if schema.horizon is not None:
            horizon = round(schema.horizon / time_scale) if time_scale else int(schema.horizon)
            if time_scale:
                logger.info(f"Horizon {schema.horizon}s converted to {horizon} steps")
        params = EncodingParams(**schema.encoding.model_dump())
        backend_config = solver_service.backend_from_settings(
            name=backend or schema.backend.name,
            executable=schema.backend.path,
            time_limit=time_limit or schema.backend.time_limit,
            mip_gap=schema.backend.mip_gap,
            threads=schema.backend.threads,
            keep_files=schema.backend.keep_lp if keep_lp is None else keep_lp,
        )
        directory = Path(out_dir or schema.outputs.directory or Path(settings.OUTPUT_DIR) / schema.name)
        return cls(schema, formula, tolerances, params, backend_config, variables, system, horizon, directory)

    def mission_horizon(self) -> int:
        """Declared horizon, or the one the formula needs when the scenario leaves it out."""
        if self.horizon is None:
            return required_horizon(self.formula, self.tolerances)
        return self.horizon

    def require_system(self) -> LinearSystem:
        if self.system is None:
            raise ScenarioError(f"Scenario '{self.name}' has no dynamics section")
        return self.system


@dataclass
class MonitorResult:
    satisfied: bool
    space_robustness: float
    theta_right: int
    theta_left: int
    report: RelaxationReport


class ScenarioService:
    def __init__(self, scenario: Scenario):
        self.scenario = scenario

    # --- monitor ---------------------------------------------------------

    def monitor(self, signal: Signal) -> MonitorResult:
        f = self.scenario.formula
        result = MonitorResult(
            satisfied=monitor_service.eval_bool(f, signal, 0),
            space_robustness=monitor_service.space_robustness(f, signal, 0),
            theta_right=monitor_service.time_robustness(f, signal, 0, "right"),
            theta_left=monitor_service.time_robustness(f, signal, 0, "left"),
            report=monitor_service.tau_overall(f, signal, 0, self.scenario.tolerances),
        )
        logger.info(f"Monitored '{self.scenario.name}': tau = {result.report.tau}")
        return result

    def read_signal(self, path) -> Signal:
        return storage_service.read_signal_csv(path, self.scenario.variables or None)

    # --- synthesis -------------------------------------------------------

    def encoder(self, objective: str) -> MilpEncoder:
        s = self.scenario
        encoder = MilpEncoder(s.require_system(), s.formula, s.mission_horizon(), s.variables, s.tolerances,
                              s.params, objective, auto_extend=settings.horizon_extension_enabled)
        encoder.build()
        if s.schema.input_grid is not None:
            encoder.restrict_inputs_to_grid(oracle_service.normalize_grid(s.schema.input_grid, encoder.system.m))
        return encoder

    def synthesize(self, objective: Optional[str] = None) -> SynthesisResult:
        objective = objective or self.scenario.schema.objective
        encoder = self.encoder(objective)
        solution = solver_service.solve(encoder.model, self.scenario.backend)
        if solution.status == SolveStatus.INFEASIBLE:
            raise InfeasibleError(f"Scenario '{self.scenario.name}' ({objective}) is infeasible")
        if not solution.has_values:
            raise SolverError(f"Solver returned {solution.status.value} without a solution")
        return encoder.extract_report(solution)

    def compare(self) -> List[SynthesisResult]:
        results = [self.synthesize(objective) for objective in OBJECTIVES]
        relaxed = results[0]
        others = results[1:]
        exact = relaxed.solution.status == SolveStatus.OPTIMAL and self.scenario.backend.mip_gap == 0
        if exact and any(relaxed.report.tau > r.report.tau for r in others):
            raise SolutionInconsistencyError("Relaxation-optimal trajectory has a larger tau than a robustness-optimal one")
        return results

    def export_lp(self, objective: Optional[str] = None) -> ExportResponse:
        encoder = self.encoder(objective or self.scenario.schema.objective)
        return ExportResponse(lp=solver_service.export_lp(encoder.model), counts=encoder.model.counts())

    def oracle(self) -> oracle_service.OracleResult:
        s = self.scenario
        if s.schema.input_grid is None:
            raise ScenarioError(f"Scenario '{s.name}' has no input_grid for the oracle")
        return oracle_service.brute_force_synthesize(
            s.require_system(), s.formula, s.mission_horizon(), s.variables, s.schema.input_grid, s.tolerances
        )

    # --- responses and artifacts ----------------------------------------

    @staticmethod
    def monitor_response(result: MonitorResult) -> MonitorResponse:
        return MonitorResponse(
            satisfied=result.satisfied,
            space_robustness=result.space_robustness,
            time_robustness_right=result.theta_right,
            time_robustness_left=result.theta_left,
            report=RelaxationReportSchema.from_report(result.report),
        )

    @staticmethod
    def synthesis_response(result: SynthesisResult) -> SynthesisResponse:
        return SynthesisResponse(
            objective=result.objective,
            status=result.solution.status.value,
            horizon=result.signal.horizon,
            objective_value=result.solution.objective,
            theta=result.theta,
            solve_time=result.solve_time,
            build_time=result.build_time,
            counts=result.counts,
            inputs=np.asarray(result.inputs).tolist(),
            states=result.signal.values.T.tolist(),
            report=RelaxationReportSchema.from_report(result.report),
        )

    @staticmethod
    def compare_response(results: List[SynthesisResult]) -> CompareResponse:
        rows = []
        for r in results:
            rows.append(CompareRow(
                objective=r.objective,
                tau=fraction_text(r.report.tau),
                tau_value=float(r.report.tau),
                theta=r.theta,
                solve_time=r.solve_time,
                build_time=r.build_time,
                variables=r.counts.get("variables", 0),
                integer_variables=r.counts.get("binary", 0) + r.counts.get("integer", 0),
                constraints=r.counts.get("constraints", 0),
                relaxed_spec=None if r.report.relaxed_formula is None else to_text(r.report.relaxed_formula),
            ))
        relaxed = next(r for r in results if r.objective == RELAXATION)
        smallest = all(relaxed.report.tau <= r.report.tau for r in results)
        return CompareResponse(rows=rows, relaxation_is_smallest=smallest)

    @staticmethod
    def oracle_response(result: oracle_service.OracleResult) -> OracleResponse:
        return OracleResponse(
            tau=fraction_text(result.tau),
            tau_value=float(result.tau),
            inputs=np.asarray(result.inputs).tolist(),
            enumerated=result.enumerated,
            report=RelaxationReportSchema.from_report(result.report),
        )

    def write_synthesis(self, result: SynthesisResult, suffix: str = "") -> Dict[str, Path]:
        """Trajectory CSV, report JSON and relaxed spec text under the output directory."""
        out = self.scenario.output_dir
        outputs = self.scenario.schema.outputs
        stem = f"_{suffix}" if suffix else ""
        paths = {
            "trajectory": storage_service.write_trajectory_csv(
                out / _with_suffix(outputs.trajectory, stem), result.signal, result.inputs),
            "report": storage_service.write_json(
                out / _with_suffix(outputs.report, stem), self.synthesis_response(result).model_dump()),
            "relaxed_spec": storage_service.write_text(
                out / _with_suffix(outputs.relaxed_spec, stem),
                "" if result.report.relaxed_formula is None else to_text(result.report.relaxed_formula)),
        }
        if self.scenario.backend.keep_files:
            paths["lp"] = storage_service.write_text(
                out / _with_suffix(outputs.lp, stem), self.export_lp(result.objective).lp)
        for label, path in paths.items():
            logger.info(f"Wrote {label}: {path}")
        return paths


def _with_suffix(filename: str, stem: str) -> str:
    path = Path(filename)
    return f"{path.stem}{stem}{path.suffix}"

"""
Solver execution over LP files.

export_lp writes the CPLEX LP dialect; CBC runs as a subprocess with a
solution file, HiGHS reads the same file through highspy. Every accepted
solution is re-checked against the model's constraints.
"""
import logging
import subprocess
import time
import uuid
from pathlib import Path
from typing import Dict, List, Optional

from app.config import settings
from app.exceptions import EncodingError, SolverError
from app.models.milp import MilpModel, Sense, VarKind
from app.models.solution import BackendConfig, Solution, SolveStatus
from app.services.storage_service import work_dir

logger = logging.getLogger(__name__)

RESIDUAL_TOLERANCE = 1e-5
TERMS_PER_LINE = 6


def format_coefficient(value: float) -> str:
    if float(value).is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(float(value))


def _expression(terms: Dict[int, float], names: List[str]) -> List[str]:
    """Render sum(coef * var) as LP text, wrapped over several lines."""
    pieces = []
    for index in sorted(terms):
        coef = terms[index]
        sign = "-" if coef < 0 else "+"
        pieces.append(f"{sign} {format_coefficient(abs(coef))} {names[index]}")
    if pieces and pieces[0].startswith("+ "):
        pieces[0] = pieces[0][2:]
    return [" ".join(pieces[i:i + TERMS_PER_LINE]) for i in range(0, len(pieces), TERMS_PER_LINE)]


def export_lp(model: MilpModel, minimize_only: bool = False) -> str:
    """
    Deterministic CPLEX-LP text for the model.

    Args:
        model: Well-formed model with a non-empty objective.
        minimize_only: Write a maximization as minimization of the negated
            objective (for readers that mishandle Maximize).

    Returns:
        LP document.
    """
    model.check()
    names = [v.name for v in model.variables]
    sense = model.sense
    objective = model.objective
    if minimize_only and sense == Sense.MAXIMIZE:
        objective = -objective
        sense = Sense.MINIMIZE

    lines = [f"\\ Model {model.name}"]
    if objective.constant:
        lines.append(f"\\ Objective constant {format_coefficient(objective.constant)}")
    lines.append("Maximize" if sense == Sense.MAXIMIZE else "Minimize")
    body = _expression({i: c for i, c in objective.terms.items() if c != 0.0}, names)
    if not body:
        raise EncodingError("Model has an empty objective")
    lines.append(f" obj: {body[0]}")
    lines.extend(f"   {chunk}" for chunk in body[1:])

    lines.append("Subject To")
    for c in model.constraints:
        body = _expression(c.terms, names)
        lines.append(f" {c.name}: {body[0]}")
        lines.extend(f"   {chunk}" for chunk in body[1:])
        lines.append(f"   {c.sense} {format_coefficient(c.rhs)}")

    lines.append("Bounds")
    for v in model.variables:
        if v.kind == VarKind.BINARY:
            continue
        if v.lb is None and v.ub is None:
            lines.append(f" {v.name} free")
        elif v.lb is None:
            lines.append(f" -inf <= {v.name} <= {format_coefficient(v.ub)}")
        elif v.ub is None:
            lines.append(f" {v.name} >= {format_coefficient(v.lb)}")
        elif v.lb == v.ub:
            lines.append(f" {v.name} = {format_coefficient(v.lb)}")
        else:
            lines.append(f" {format_coefficient(v.lb)} <= {v.name} <= {format_coefficient(v.ub)}")

    generals = [v.name for v in model.variables if v.kind == VarKind.INTEGER]
    binaries = [v.name for v in model.variables if v.kind == VarKind.BINARY]
    for title, group in (("General", generals), ("Binary", binaries)):
        if group:
            lines.append(title)
            lines.extend(f" {' '.join(group[i:i + 10])}" for i in range(0, len(group), 10))
    lines.append("End")
    return "\n".join(lines) + "\n"


def backend_from_settings(**overrides) -> BackendConfig:
    values = dict(
        name=settings.SOLVER_BACKEND,
        executable=settings.SOLVER_PATH or None,
        time_limit=settings.SOLVER_TIME_LIMIT,
        mip_gap=settings.SOLVER_MIP_GAP,
        threads=settings.SOLVER_THREADS,
        keep_files=settings.KEEP_LP,
        work_dir=settings.WORK_DIR or None,
    )
    values.update({k: v for k, v in overrides.items() if v is not None})
    return BackendConfig(**values)


def backend_available(config: Optional[BackendConfig] = None) -> bool:
    config = config or backend_from_settings()
    if config.name == "highs":
        try:
            import highspy  # noqa: F401
        except ImportError:
            return False
        return True
    executable = config.executable or settings.solver_executable
    return bool(executable) and Path(executable).exists()


# --- CBC ------------------------------------------------------------------

CBC_STATUS = {
    "Optimal": SolveStatus.OPTIMAL,
    "Infeasible": SolveStatus.INFEASIBLE,
    "Integer": SolveStatus.INFEASIBLE,  # "Integer infeasible"
    "Unbounded": SolveStatus.ERROR,
    "Stopped": SolveStatus.TIMEOUT,
}


def parse_cbc_solution(text: str, model: MilpModel) -> Solution:
    """Parse a CBC solution file (status line, then 'index name value reduced_cost' rows)."""
    lines = text.splitlines()
    if not lines or not lines[0].split():
        raise SolverError("CBC wrote an empty solution file")
    header = lines[0]
    word = header.split()[0]
    if word not in CBC_STATUS:
        raise SolverError(f"Unrecognised CBC status line: {header!r}")
    status = CBC_STATUS[word]
    if status == SolveStatus.INFEASIBLE:
        return Solution(SolveStatus.INFEASIBLE, backend="cbc")
    if word == "Stopped":
        if "no integer solution" in header:
            # values are the LP relaxation, not a usable incumbent
            return Solution(SolveStatus.TIMEOUT, backend="cbc")
        if "time" not in header:
            status = SolveStatus.FEASIBLE

    values: Dict[int, float] = {}
    for line in lines[1:]:
        parts = line.split()
        if len(parts) < 3:
            continue
        if parts[0] == "**":
            parts = parts[1:]
        try:
            index = model.index_of(parts[1])
            values[index] = float(parts[2])
        except (IndexError, ValueError) as e:
            raise SolverError(f"Unparseable CBC solution row {line!r}: {e}")
        except EncodingError:
            # CBC can list helper columns it created itself
            continue
    if values:
        for v in model.variables:
            values.setdefault(v.index, 0.0)
    return Solution(status, values=values, backend="cbc")


def _run_cbc(model: MilpModel, config: BackendConfig, folder: Path) -> Solution:
    executable = config.executable or settings.solver_executable
    if not executable:
        raise SolverError("No CBC executable found (set SOLVER_PATH or install pulp)")
    lp_path = folder / "model.lp"
    sol_path = folder / "solution.txt"
    lp_path.write_text(export_lp(model, minimize_only=True))
    command = [
        executable, str(lp_path),
        "-sec", str(config.time_limit),
        "-ratio", str(config.mip_gap),
        "-threads", str(config.threads),
        "-timeMode", "elapsed",
        "-branch",
        "-printingOptions", "all",
        "-solution", str(sol_path),
    ]
    logger.info(f"Running {' '.join(command)}")
    try:
        completed = subprocess.run(command, capture_output=True, text=True, timeout=config.time_limit + 60)
    except (OSError, subprocess.TimeoutExpired) as e:
        raise SolverError(f"CBC failed to run: {e}")
    if completed.returncode != 0 or not sol_path.exists():
        tail = (completed.stdout or "")[-500:]
        raise SolverError(f"CBC exited with code {completed.returncode}: {tail}")
    solution = parse_cbc_solution(sol_path.read_text(), model)
    if solution.status == SolveStatus.TIMEOUT and not solution.has_values:
        logger.warning("CBC stopped on the time limit without an incumbent")
    return solution


# --- HiGHS ----------------------------------------------------------------

def _run_highs(model: MilpModel, config: BackendConfig, folder: Path) -> Solution:
    try:
        import highspy
    except ImportError as e:
        raise SolverError(f"highspy is not installed: {e}")
    lp_path = folder / "model.lp"
    lp_path.write_text(export_lp(model))
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("time_limit", float(config.time_limit))
    h.setOptionValue("mip_rel_gap", float(config.mip_gap))
    if h.readModel(str(lp_path)) == highspy.HighsStatus.kError:
        raise SolverError("HiGHS could not read the LP file")
    logger.info(f"Running HiGHS on {lp_path}")
    h.run()
    status_text = h.modelStatusToString(h.getModelStatus())
    model_status = h.getModelStatus()
    logger.info(f"HiGHS status: {status_text}")

    if model_status == highspy.HighsModelStatus.kInfeasible:
        return Solution(SolveStatus.INFEASIBLE, backend="highs")
    if model_status == highspy.HighsModelStatus.kOptimal:
        status = SolveStatus.OPTIMAL
    elif model_status == highspy.HighsModelStatus.kTimeLimit:
        status = SolveStatus.TIMEOUT
    elif model_status == highspy.HighsModelStatus.kUnboundedOrInfeasible:
        return Solution(SolveStatus.INFEASIBLE, backend="highs")
    else:
        raise SolverError(f"HiGHS finished with status '{status_text}'")

    solution = h.getSolution()
    values: Dict[int, float] = {}
    if solution.value_valid:
        names = list(h.getLp().col_names_)
        for name, value in zip(names, solution.col_value):
            values[model.index_of(name)] = float(value)
        for v in model.variables:
            values.setdefault(v.index, 0.0)
    return Solution(status, values=values, backend="highs")


# --- entry point ----------------------------------------------------------

def _clean(model: MilpModel, values: Dict[int, float]) -> Dict[int, float]:
    """Round binaries at 0.5 and integers to the nearest integer."""
    cleaned = dict(values)
    for v in model.variables:
        if v.kind == VarKind.BINARY:
            cleaned[v.index] = 1.0 if cleaned[v.index] >= 0.5 else 0.0
        elif v.kind == VarKind.INTEGER:
            cleaned[v.index] = float(round(cleaned[v.index]))
    return cleaned


def solve(model: MilpModel, config: Optional[BackendConfig] = None) -> Solution:
    """
    Solve a model with the configured backend.

    Returns:
        Solution with status optimal, timeout (with the incumbent when one
        exists), feasible or infeasible.

    Raises:
        SolverError: subprocess failure, unparseable output, or a solution that
            violates the model by more than the residual tolerance. The LP file
            is kept for inspection.
    """
    config = config or backend_from_settings()
    runner = _run_cbc if config.name == "cbc" else _run_highs
    with work_dir(keep=config.keep_files, root=config.work_dir) as folder:
        lp_file = folder / "model.lp"
        started = time.perf_counter()
        try:
            solution = runner(model, config, folder)
            solution.solve_time = time.perf_counter() - started
            if solution.has_values:
                solution.values = _clean(model, solution.values)
                worst = model.max_residual(solution.values)
                if worst > RESIDUAL_TOLERANCE:
                    raise SolverError(f"Solution violates the model (relative residual {worst:.3g})")
                solution.objective = model.objective.evaluate(solution.values)
        except SolverError as e:
            raise SolverError(str(e), _retain(lp_file, config)) from e

    logger.info(
        f"{config.name}: {solution.status.value} in {solution.solve_time:.2f}s"
        + (f", objective {solution.objective:.9g}" if solution.objective is not None else "")
    )
    return solution


def _retain(lp_file: Path, config: BackendConfig) -> Optional[str]:
    """Path of an LP file that outlives the work dir; each failed run gets its own file."""
    if not lp_file.exists():
        return None
    if config.keep_files:
        return str(lp_file)
    kept = Path(settings.OUTPUT_DIR) / f"failed_model_{time.strftime('%Y%m%d-%H%M%S')}_{uuid.uuid4().hex[:8]}.lp"
    kept.parent.mkdir(parents=True, exist_ok=True)
    kept.write_text(lp_file.read_text())
    return str(kept)

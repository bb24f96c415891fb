"""
Domain errors.

Every error raised by the toolkit derives from StlRelaxError so the CLI and the
HTTP layer can map them onto exit codes / status codes in one place.
"""
from typing import Optional, Tuple


class StlRelaxError(Exception):
    """Base class for toolkit errors."""

    exit_code = 1
    status_code = 500


class ValidationFailure(StlRelaxError):
    """Input rejected before any solving happened."""

    exit_code = 4
    status_code = 422


class FormulaSyntaxError(ValidationFailure):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class FragmentViolationError(ValidationFailure):
    def __init__(self, message: str, path: Tuple[int, ...], subterm: str):
        super().__init__(f"{message}: {subterm} (node path {list(path)})")
        self.path = path
        self.subterm = subterm


class HorizonError(ValidationFailure):
    def __init__(self, instant: int, horizon: int):
        super().__init__(f"Instant {instant} is outside the signal horizon [0, {horizon}]")
        self.instant = instant
        self.horizon = horizon


class DimensionError(ValidationFailure):
    pass


class InputBoundsError(ValidationFailure):
    pass


class ScenarioError(ValidationFailure):
    pass


class OracleBudgetError(ValidationFailure):
    pass


class EncodingError(StlRelaxError):
    exit_code = 4
    status_code = 422


class SolverError(StlRelaxError):
    exit_code = 3
    status_code = 502

    def __init__(self, message: str, lp_path: Optional[str] = None):
        if lp_path:
            message = f"{message} (LP file kept at {lp_path})"
        super().__init__(message)
        self.lp_path = lp_path


class InfeasibleError(StlRelaxError):
    exit_code = 2
    status_code = 409


class SolutionInconsistencyError(StlRelaxError):
    exit_code = 3
    status_code = 500

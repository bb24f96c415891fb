"""
Brute-force synthesis over finite input grids.

Used as an independent check of the MILP optimum on small instances: every
input sequence is rolled out and monitored exactly.
"""
import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from app.config import settings
from app.exceptions import OracleBudgetError
from app.models.formula import Formula, Tolerances
from app.models.relaxation import RelaxationReport
from app.models.system import LinearSystem
from app.services import dynamics_service, monitor_service
from app.services.fragment_service import negation_normal_form, required_horizon, validate_fragment

logger = logging.getLogger(__name__)


@dataclass
class OracleResult:
    inputs: np.ndarray
    tau: Fraction
    report: RelaxationReport
    enumerated: int


def normalize_grid(grid, m: int) -> list:
    """Accept one list shared by all input components or one list per component."""
    if grid is None or len(grid) == 0:
        raise OracleBudgetError("Input grid is empty")
    if all(isinstance(v, (int, float)) for v in grid):
        grid = [list(grid)] * m
    if len(grid) != m:
        raise OracleBudgetError(f"Input grid has {len(grid)} components, system has {m} inputs")
    out = [sorted(set(float(v) for v in values)) for values in grid]
    if any(not values for values in out):
        raise OracleBudgetError("Input grid has an empty component")
    return out


def brute_force_synthesize(sys: LinearSystem, formula: Formula, horizon: int, variables,
                           input_grid: Sequence, tol: Optional[Tolerances] = None,
                           max_enumerations: Optional[int] = None) -> OracleResult:
    """
    Exhaustive minimum of the overall relaxation over grid-valued input sequences.

    Sequences are visited in lexicographic order of (u_0 components, u_1
    components, ...) over the sorted grids, so the first minimizer found is
    the lexicographically smallest one.

    Raises:
        OracleBudgetError: empty grid or more sequences than the budget allows.
    """
    tol = tol or Tolerances()
    budget = settings.ORACLE_MAX_ENUMERATIONS if max_enumerations is None else max_enumerations
    grid = normalize_grid(input_grid, sys.m)
    nnf = negation_normal_form(formula)
    validate_fragment(nnf)
    needed = required_horizon(nnf, tol)
    if needed > horizon:
        logger.warning(f"Extending mission horizon from {horizon} to {needed} steps to cover relaxation windows")
        horizon = needed
    total = math.prod(len(values) for values in grid) ** horizon
    if total > budget:
        raise OracleBudgetError(f"{total} input sequences exceed the enumeration budget of {budget}")
    logger.info(f"Enumerating {total} input sequences over horizon {horizon}")

    per_step = list(itertools.product(*grid))
    best: Optional[OracleResult] = None
    count = 0
    for sequence in itertools.product(per_step, repeat=horizon):
        count += 1
        inputs = np.asarray(sequence, dtype=float).reshape(horizon, sys.m)
        signal = dynamics_service.rollout(sys, inputs, variables)
        report = monitor_service.tau_overall(nnf, signal, 0, tol)
        if best is None or report.tau < best.tau:
            best = OracleResult(inputs, report.tau, report, count)
            if best.tau == 0:
                break
    best.enumerated = count
    logger.info(f"Oracle minimum {best.tau} after {count} rollouts")
    return best

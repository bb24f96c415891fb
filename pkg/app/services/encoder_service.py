"""
Compilation of dynamics + fragment formula into a MilpModel.

Two objectives are supported:
  * relaxation: minimize the overall temporal relaxation (z variables only in
    the windows each subtask can reach);
  * time_robustness_right / time_robustness_left: maximize right/left time
    robustness, which needs predicate binaries and counters over the whole
    horizon.

The small encode_* functions are the building blocks; MilpEncoder wires them
together and records the handles needed to read a solution back.
"""
import logging
import time
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from app.exceptions import DimensionError, EncodingError, HorizonError, SolutionInconsistencyError
from app.models.formula import (
    And,
    Finally,
    Formula,
    Globally,
    Not,
    Or,
    Path,
    Pred,
    Predicate,
    RelaxationBounds,
    Tolerances,
)
from app.models.milp import EncodingParams, LinExpr, MilpModel, Sense, Variable
from app.models.relaxation import FINALLY, GLOBALLY
from app.models.solution import Solution, SynthesisResult
from app.models.system import LinearSystem
from app.services import dynamics_service, monitor_service
from app.services.fragment_service import (
    is_site,
    negation_normal_form,
    required_horizon,
    validate_fragment,
)

logger = logging.getLogger(__name__)

RELAXATION = "relaxation"
TIME_ROBUSTNESS_RIGHT = "time_robustness_right"
TIME_ROBUSTNESS_LEFT = "time_robustness_left"
OBJECTIVES = (RELAXATION, TIME_ROBUSTNESS_RIGHT, TIME_ROBUSTNESS_LEFT)

CROSS_CHECK_TOLERANCE = 1e-6
# predicate separation relative to its big-M; far above MILP integrality tolerances
EPS_PER_BIG_M = 1e-5
# above monitor_service.PREDICATE_TOLERANCE, so a violated branch never reads as satisfied
MIN_EPS = 1e-5


def _bound(value: float) -> Optional[float]:
    return float(value) if np.isfinite(value) else None


# --- building blocks --------------------------------------------------------

def encode_dynamics(model: MilpModel, sys: LinearSystem, horizon: int) -> Tuple[List[List[Variable]], List[List[Variable]]]:
    """
    State variables x[t][i] for t in [0, T] and inputs u[t][j] for t in [0, T-1],
    boxed by the system bounds, tied by x_{t+1} = A x_t + B u_t with x_0 fixed.
    """
    if horizon < 0:
        raise DimensionError(f"Horizon must be non-negative, got {horizon}")
    x = [
        [model.continuous(f"x{i}_{t}", _bound(sys.x_lo[i]), _bound(sys.x_hi[i])) for i in range(sys.n)]
        for t in range(horizon + 1)
    ]
    u = [
        [model.continuous(f"u{j}_{t}", _bound(sys.u_lo[j]), _bound(sys.u_hi[j])) for j in range(sys.m)]
        for t in range(horizon)
    ]
    for i in range(sys.n):
        model.add_eq(x[0][i], float(sys.x0[i]), name=f"init_{i}")
    for t in range(horizon):
        for i in range(sys.n):
            rhs = LinExpr.total(float(sys.A[i, k]) * x[t][k] for k in range(sys.n) if sys.A[i, k] != 0)
            rhs = rhs + LinExpr.total(float(sys.B[i, j]) * u[t][j] for j in range(sys.m) if sys.B[i, j] != 0)
            model.add_eq(x[t + 1][i] - rhs, 0.0, name=f"dyn_{i}_{t}")
    return x, u


def predicate_expression(p: Predicate, x_t: Sequence[Variable], variables: Mapping[str, int]) -> Tuple[LinExpr, bool]:
    coeffs, offset, strict = p.normalized()
    expr = LinExpr(constant=offset)
    for name, coef in coeffs.items():
        if name not in variables:
            raise DimensionError(f"Formula variable '{name}' is not bound to a state index")
        expr = expr + coef * x_t[variables[name]]
    return expr, strict


def predicate_range(p: Predicate, lo: np.ndarray, hi: np.ndarray, variables: Mapping[str, int]) -> Tuple[float, float]:
    """Smallest and largest p(x) over the box lo <= x <= hi (possibly infinite)."""
    coeffs, offset, _ = p.normalized()
    p_min = p_max = offset
    for name, coef in coeffs.items():
        if name not in variables:
            raise DimensionError(f"Formula variable '{name}' is not bound to a state index")
        i = variables[name]
        ends = (coef * lo[i], coef * hi[i])
        p_min += min(ends)
        p_max += max(ends)
    return p_min, p_max


def predicate_constants(p: Predicate, lo: Optional[np.ndarray], hi: Optional[np.ndarray],
                        variables: Mapping[str, int], params: EncodingParams) -> Tuple[float, float]:
    """
    (M, eps) for one predicate whose state lies in the box [lo, hi].

    With a finite range, M is one past the largest value either row must relax
    and eps is at least EPS_PER_BIG_M * M. Otherwise the configured big-M is
    used unchanged. eps never drops below MIN_EPS.
    """
    eps = max(params.eps, MIN_EPS)
    if lo is None or hi is None:
        return params.big_m, eps
    p_min, p_max = predicate_range(p, lo, hi, variables)
    if not (np.isfinite(p_min) and np.isfinite(p_max)):
        return params.big_m, eps
    reach = max(-p_min, p_max, 0.0)
    eps = max(eps, EPS_PER_BIG_M * (reach + 1.0))
    needed = reach + eps + params.margin
    if params.big_m < needed:
        raise EncodingError(f"big-M {params.big_m} is below the reachable predicate range {needed}")
    return min(params.big_m, needed + 1.0), eps


def encode_predicate(model: MilpModel, p: Predicate, x_t: Sequence[Variable], variables: Mapping[str, int],
                     params: EncodingParams, name: str, big_m: Optional[float] = None,
                     eps: Optional[float] = None) -> Variable:
    """
    Binary z with z = 1 iff p(x_t) >= 0 (> 0 when strict):
        p >= -M (1 - z)      p <= M z - eps - margin
    Strict predicates move the separation to the satisfying side:
        p >= eps + margin - M (1 - z)      p <= M z
    The threshold value itself is always admissible for one of the two branches.
    """
    M = params.big_m if big_m is None else big_m
    eps = params.eps if eps is None else eps
    expr, strict = predicate_expression(p, x_t, variables)
    z = model.binary(name)
    if strict:
        model.add_ge(expr, eps + params.margin - M * (1 - z))
        model.add_le(expr, M * z)
    else:
        model.add_ge(expr, -M * (1 - z))
        model.add_le(expr, M * z - eps - params.margin)
    return z


def encode_boolean(model: MilpModel, kind: type, children: Sequence[Variable], name: str) -> Variable:
    """Conjunction (kind And) or disjunction (kind Or) of binaries."""
    if len(children) == 1:
        return children[0]
    z = model.binary(name)
    total = LinExpr.total(children)
    if kind is And:
        for child in children:
            model.add_le(z - child)
        model.add_ge(z, total - (len(children) - 1))
    elif kind is Or:
        for child in children:
            model.add_ge(z - child)
        model.add_le(z, total)
    else:
        raise EncodingError(f"encode_boolean expects And or Or, got {kind.__name__}")
    return z


def _counter_chain(model: MilpModel, zs: Sequence[Tuple[int, Variable]], positive: bool,
                   init: float, prefix: str) -> Dict[int, Variable]:
    """
    Linearized c_t = z_t (c_prev + 1) (positive) or c_t = (1 - z_t)(c_prev - 1),
    walking zs in the given order.
    """
    cap = float(len(zs) + abs(init) + 1)
    out: Dict[int, Variable] = {}
    prev: LinExpr = LinExpr(constant=init)
    for t, z in zs:
        if positive:
            c = model.continuous(f"{prefix}_{t}", 0.0, cap)
            model.add_le(c, cap * z)
            model.add_le(c, prev + 1)
            model.add_ge(c, prev + 1 - cap * (1 - z))
        else:
            c = model.continuous(f"{prefix}_{t}", -cap, 0.0)
            model.add_ge(c, -cap * (1 - z))
            model.add_ge(c, prev - 1)
            model.add_le(c, prev - 1 + cap * z)
        out[t] = c
        prev = LinExpr.lift(c)
    return out


def encode_counters(model: MilpModel, zs: Mapping[int, Variable], start: int, end: int, prefix: str,
                    series: Sequence[str] = ("l1", "l0", "r1", "r0"), l1_init: float = 0, l0_init: float = 0,
                    r1_init: float = 0, r0_init: float = 0) -> Dict[str, Dict[int, Variable]]:
    """
    Counter variables over [start, end]. l-series run forward from their value
    at start - 1, r-series backward from their value at end + 1.
    """
    forward = [(t, zs[t]) for t in range(start, end + 1)]
    backward = list(reversed(forward))
    inits = {"l1": l1_init, "l0": l0_init, "r1": r1_init, "r0": r0_init}
    out: Dict[str, Dict[int, Variable]] = {}
    for key in series:
        order = forward if key[0] == "l" else backward
        out[key] = _counter_chain(model, order, key[1] == "1", inits[key], f"{key}_{prefix}")
    return out


def encode_extremum(model: MilpModel, candidates: Sequence, lo: float, hi: float, name: str,
                    maximum: bool = False) -> LinExpr:
    """
    min (or max) of candidates known to lie in [lo, hi]: a selector y, one binary
    per candidate summing to 1, and big-M envelopes with M = hi - lo.
    """
    candidates = [LinExpr.lift(c) for c in candidates]
    if len(candidates) == 1:
        return candidates[0]
    M = hi - lo
    y = model.continuous(name, lo, hi)
    selectors = [model.binary(f"{name}_s{i}") for i in range(len(candidates))]
    model.add_eq(LinExpr.total(selectors), 1.0)
    for c, s in zip(candidates, selectors):
        if maximum:
            model.add_ge(y, c)
            model.add_le(y, c + M * (1 - s))
        else:
            model.add_le(y, c)
            model.add_ge(y, c - M * (1 - s))
    return LinExpr.lift(y)


# --- formula encoder --------------------------------------------------------

@dataclass
class SiteHandle:
    sid: int
    path: Path
    kind: str
    instant: int
    tau: int  # variable index


@dataclass
class EncodingSummary:
    objective: str
    horizon: int
    counts: Dict[str, int] = field(default_factory=dict)
    build_time: float = 0.0


class MilpEncoder:
    """
    Builds one MilpModel for a (system, formula, objective) triple.

    Args:
        system: Linear dynamics.
        formula: Formula in the supported fragment.
        horizon: Mission horizon T in steps.
        variables: Formula variable name -> state index.
        tolerances: Relaxation tolerances.
        params: Big-M, eps, satisfaction margin and tie-break weight.
        objective: One of OBJECTIVES.
        auto_extend: Extend T when relaxation windows reach past it.
    """

    def __init__(self, system: LinearSystem, formula: Formula, horizon: int, variables: Mapping[str, int],
                 tolerances: Optional[Tolerances] = None, params: Optional[EncodingParams] = None,
                 objective: str = RELAXATION, auto_extend: bool = True):
        if objective not in OBJECTIVES:
            raise EncodingError(f"Unknown objective '{objective}' (expected one of {', '.join(OBJECTIVES)})")
        self.system = system
        self.source_formula = formula
        self.formula = negation_normal_form(formula)
        validate_fragment(self.formula)
        self.variables = dict(variables)
        for name, index in self.variables.items():
            if not 0 <= index < system.n:
                raise DimensionError(f"Variable '{name}' maps to state {index}, system has {system.n} states")
        self.tolerances = tolerances or Tolerances()
        self.params = params or EncodingParams()
        self.objective = objective

        # all objectives share the horizon of the relaxation windows
        needed = required_horizon(self.formula, self.tolerances)
        if needed > horizon:
            if not auto_extend:
                raise HorizonError(needed, horizon)
            logger.warning(f"Extending mission horizon from {horizon} to {needed} steps to cover relaxation windows")
            horizon = needed
        self.horizon = horizon

        self.model = MilpModel(name=f"stl_{objective}")
        self.x: List[List[Variable]] = []
        self.u: List[List[Variable]] = []
        self.sites: List[SiteHandle] = []
        self.root: Optional[Variable] = None
        self.grid: Optional[List[List[float]]] = None
        self._z: Dict[Tuple[Formula, int], Variable] = {}
        self._node_ids: Dict[Formula, int] = {}
        self._reach = dynamics_service.reachable_bounds(system, horizon)
        self._constants: Dict[Tuple[Predicate, int], Tuple[float, float]] = {}
        self._aux = 0
        self.summary = EncodingSummary(objective, horizon)

    # --- helpers ---------------------------------------------------------

    def _node_id(self, node: Formula) -> int:
        return self._node_ids.setdefault(node, len(self._node_ids))

    def _next(self, prefix: str) -> str:
        self._aux += 1
        return f"{prefix}{self._aux}"

    def z(self, phi: Formula, t: int) -> Variable:
        """Binary satisfaction of a predicate-level formula at instant t (shared across sites)."""
        key = (phi, t)
        if key in self._z:
            return self._z[key]
        name = f"z{self._node_id(phi)}_{t}"
        if isinstance(phi, Pred):
            p = phi.predicate
            if (p, t) not in self._constants:
                lo, hi = self._reach
                self._constants[(p, t)] = predicate_constants(p, lo[t], hi[t], self.variables, self.params)
            big_m, eps = self._constants[(p, t)]
            var = encode_predicate(self.model, p, self.x[t], self.variables, self.params, name, big_m, eps)
        elif isinstance(phi, (And, Or)):
            children = [self.z(c, t) for c in phi.children]
            var = encode_boolean(self.model, type(phi), children, name)
        else:
            raise EncodingError(f"Cannot encode {type(phi).__name__} at predicate level")
        self._z[key] = var
        return var

    # --- relaxation sites ------------------------------------------------

    def encode_tau_finally(self, site: Finally, path: Path, t: int) -> Variable:
        """
        tau = (1 - z_F) * v / (gamma_f |I|) with v = min(-l0 at t+a, -r0 at t+b),
        saturating to 1 (removal) when no satisfaction lies in the window.
        """
        sid = len(self.sites)
        interval = site.interval
        bounds = RelaxationBounds.for_interval(interval, self.tolerances)
        beta = bounds.finally_slack
        denominator = float(bounds.finally_denominator(interval, self.tolerances))
        start, end = interval.shifted(t)
        lo = start - beta
        first = max(0, lo)
        zs = {k: self.z(site.child, k) for k in range(first, end + beta + 1)}

        z_f = encode_boolean(self.model, Or, [zs[k] for k in range(start, end + 1)], f"zf{sid}")
        left = encode_counters(self.model, zs, first, start, f"{sid}", series=("l0",), l0_init=min(0, lo))["l0"]
        right = encode_counters(self.model, zs, end, end + beta, f"{sid}", series=("r0",))["r0"]

        cap = beta + 1
        v = encode_extremum(self.model, [-left[start], -right[end]], 0.0, float(cap), f"v{sid}")
        p = self.model.continuous(f"p{sid}", 0.0, float(cap))
        self.model.add_le(p, v)
        self.model.add_le(p, cap * (1 - z_f))
        self.model.add_ge(p, v - cap * z_f)
        removed = self.model.binary(f"r{sid}")
        self.model.add_ge(p, cap * removed)
        self.model.add_le(p, beta + removed)

        tau = self.model.continuous(f"tau{sid}", 0.0, 1.0)
        self.model.add_eq(tau, p / denominator + (1.0 - cap / denominator) * removed)
        self.sites.append(SiteHandle(sid, path, FINALLY, t, tau.index))
        return tau

    def encode_tau_globally(self, site: Globally, path: Path, t: int) -> Variable:
        """
        tau = g (|I| - S) / (gamma_g |I|) + (1 - g) with S = l1 at mid + r1 at mid + 1,
        where g gates on the core [a + beta, b - beta] holding throughout.
        """
        sid = len(self.sites)
        interval = site.interval
        n = interval.cardinality
        bounds = RelaxationBounds.for_interval(interval, self.tolerances)
        beta = bounds.globally_half_slack
        denominator = float(bounds.globally_denominator(interval, self.tolerances))
        start, end = interval.shifted(t)
        mid = (start + end) // 2
        zs = {k: self.z(site.child, k) for k in range(start, end + 1)}

        l1 = encode_counters(self.model, zs, start, mid, f"{sid}", series=("l1",))["l1"]
        run = LinExpr.lift(l1[mid])
        if mid + 1 <= end:
            r1 = encode_counters(self.model, zs, mid + 1, end, f"{sid}", series=("r1",))["r1"]
            run = run + r1[mid + 1]

        tau = self.model.continuous(f"tau{sid}", 0.0, 1.0)
        if start + beta <= end - beta:
            gate = encode_boolean(self.model, And, [zs[k] for k in range(start + beta, end - beta + 1)], f"g{sid}")
            q = self.model.continuous(f"q{sid}", 0.0, float(n))
            self.model.add_le(q, run)
            self.model.add_le(q, n * gate)
            self.model.add_ge(q, run - n * (1 - gate))
            self.model.add_eq(tau, (n * gate - q) / denominator + 1 - gate)
        else:
            self.model.add_eq(tau, (n - run) / denominator)
        self.sites.append(SiteHandle(sid, path, GLOBALLY, t, tau.index))
        return tau

    def encode_tau_overall(self, f: Formula, path: Path = (), t: int = 0) -> LinExpr:
        """Average over conjunctions, min over disjunctions and outer finally, max over outer globally."""
        if is_site(f):
            if isinstance(f, Finally):
                return LinExpr.lift(self.encode_tau_finally(f, path, t))
            return LinExpr.lift(self.encode_tau_globally(f, path, t))
        if isinstance(f, And):
            parts = [self.encode_tau_overall(c, path + (i,), t) for i, c in enumerate(f.children)]
            return LinExpr.total(parts) * (1.0 / len(parts))
        if isinstance(f, Or):
            parts = [self.encode_tau_overall(c, path + (i,), t) for i, c in enumerate(f.children)]
            return encode_extremum(self.model, parts, 0.0, 1.0, self._next("y"))
        if isinstance(f, (Finally, Globally)):
            start, end = f.interval.shifted(t)
            parts = [self.encode_tau_overall(f.child, path + (0,), k) for k in range(start, end + 1)]
            return encode_extremum(self.model, parts, 0.0, 1.0, self._next("y"), maximum=isinstance(f, Globally))
        raise EncodingError(f"Unexpected node in negation normal form: {type(f).__name__}")

    # --- time robustness -------------------------------------------------

    def encode_time_robustness_objective(self, side: str) -> LinExpr:
        """
        Predicate-level time robustness from full-horizon counters,
        theta = r1 + r0 - 2 z + 1 (right) or l1 + l0 - 2 z + 1 (left),
        composed by min/max.
        """
        T = self.horizon
        theta: Dict[Predicate, Dict[int, LinExpr]] = {}
        keys = ("r1", "r0") if side == "right" else ("l1", "l0")

        def predicate_theta(p: Predicate) -> Dict[int, LinExpr]:
            if p not in theta:
                node = Pred(p)
                zs = {k: self.z(node, k) for k in range(T + 1)}
                series = encode_counters(self.model, zs, 0, T, f"p{self._node_id(node)}", series=keys)
                theta[p] = {
                    k: series[keys[0]][k] + series[keys[1]][k] - 2 * zs[k] + 1 for k in range(T + 1)
                }
            return theta[p]

        lo, hi = -float(T + 1), float(T + 1)

        def compose(node: Formula, k: int) -> LinExpr:
            if isinstance(node, Pred):
                return predicate_theta(node.predicate)[k]
            if isinstance(node, And):
                return encode_extremum(self.model, [compose(c, k) for c in node.children], lo, hi, self._next("y"))
            if isinstance(node, Or):
                return encode_extremum(self.model, [compose(c, k) for c in node.children], lo, hi,
                                       self._next("y"), maximum=True)
            if isinstance(node, (Finally, Globally)):
                start, end = node.interval.shifted(k)
                parts = [compose(node.child, j) for j in range(start, end + 1)]
                return encode_extremum(self.model, parts, lo, hi, self._next("y"), maximum=isinstance(node, Finally))
            if isinstance(node, Not):
                return -compose(node.child, k)
            raise EncodingError(f"Unexpected node: {type(node).__name__}")

        return compose(self.formula, 0)

    # --- assembly --------------------------------------------------------

    def _tie_break(self) -> LinExpr:
        weight = self.params.tie_break_weight
        if weight <= 0 or self.horizon == 0 or self.system.m == 0:
            return LinExpr()
        scale = weight / (self.system.m * self.horizon * self.system.input_magnitude)
        magnitudes = []
        for t, row in enumerate(self.u):
            for j, u in enumerate(row):
                a = self.model.continuous(f"absu{j}_{t}", 0.0, None)
                self.model.add_ge(a, u)
                self.model.add_ge(a, -u)
                magnitudes.append(a)
        return LinExpr.total(magnitudes) * scale

    def build(self) -> MilpModel:
        started = time.perf_counter()
        self.x, self.u = encode_dynamics(self.model, self.system, self.horizon)
        if self.objective == RELAXATION:
            self.root = self.model.continuous("tau_root", 0.0, 1.0)
            self.model.add_eq(self.root, self.encode_tau_overall(self.formula))
            self.model.set_objective(self.root + self._tie_break(), Sense.MINIMIZE)
        else:
            side = "right" if self.objective == TIME_ROBUSTNESS_RIGHT else "left"
            T = float(self.horizon + 1)
            self.root = self.model.continuous("theta_root", -T, T)
            self.model.add_eq(self.root, self.encode_time_robustness_objective(side))
            self.model.set_objective(self.root - self._tie_break(), Sense.MAXIMIZE)

        self.model.metadata.update({
            "objective": self.objective,
            "horizon": self.horizon,
            "root": self.root.index,
            "sites": [h.__dict__ for h in self.sites],
        })
        self.summary.counts = self.model.counts()
        self.summary.build_time = time.perf_counter() - started
        logger.info(
            f"Built {self.objective} model: {self.summary.counts['variables']} variables "
            f"({self.summary.counts['binary']} binary), {self.summary.counts['constraints']} constraints "
            f"in {self.summary.build_time:.2f}s"
        )
        return self.model

    # --- test / oracle helpers -------------------------------------------

    def restrict_inputs_to_grid(self, grid: Sequence[Sequence[float]]) -> None:
        """Force every input component onto its finite grid (one binary per grid value)."""
        if len(grid) != self.system.m:
            raise DimensionError(f"Input grid has {len(grid)} components, system has {self.system.m} inputs")
        self.grid = [sorted(set(float(v) for v in values)) for values in grid]
        for j, values in enumerate(self.grid):
            if not values:
                raise EncodingError(f"Input grid for component {j} is empty")
        for t, row in enumerate(self.u):
            for j, u in enumerate(row):
                picks = [self.model.binary(f"w{j}_{t}_{k}") for k in range(len(self.grid[j]))]
                self.model.add_eq(LinExpr.total(picks), 1.0)
                self.model.add_eq(u - LinExpr.total(v * w for v, w in zip(self.grid[j], picks)), 0.0)
        self.model.metadata["grid"] = self.grid

    def pin_inputs(self, inputs) -> None:
        """Fix the input sequence, leaving only the logic variables free."""
        inputs = np.asarray(inputs, dtype=float).reshape(self.horizon, self.system.m)
        for t, row in enumerate(self.u):
            for j, u in enumerate(row):
                self.model.add_eq(u, float(inputs[t, j]), name=f"pin{j}_{t}")

    # --- decoding --------------------------------------------------------

    def _inputs_from(self, values: Mapping[int, float]) -> np.ndarray:
        u = np.array([[values[v.index] for v in row] for row in self.u], dtype=float).reshape(self.horizon, self.system.m)
        if self.grid is not None:
            for j, options in enumerate(self.grid):
                options_arr = np.asarray(options)
                u[:, j] = options_arr[np.abs(u[:, j][:, None] - options_arr[None, :]).argmin(axis=1)]
        return np.clip(u, self.system.u_lo, self.system.u_hi)

    def satisfaction_bits(self, solution: Solution) -> Dict[Tuple[Formula, int], int]:
        """Solver value of every predicate-level binary, keyed by (formula, instant)."""
        return {key: int(round(solution.values[var.index])) for key, var in self._z.items()}

    def extract_report(self, solution: Solution) -> SynthesisResult:
        """
        Decode inputs, re-simulate, and cross-check the solver's objective
        against the monitor on the resulting trajectory.

        Raises:
            SolutionInconsistencyError: when the rollout or the monitored value
                disagrees with the solver.
        """
        if not solution.has_values:
            raise SolutionInconsistencyError(f"Solution ({solution.status.value}) carries no variable values")
        values = solution.values
        inputs = self._inputs_from(values)
        signal = dynamics_service.rollout(self.system, inputs, self.variables)

        solver_x = np.array([[values[v.index] for v in row] for row in self.x]).T
        drift = np.max(np.abs(solver_x - signal.values) / (1.0 + np.abs(signal.values)))
        if drift > 1e-5:
            raise SolutionInconsistencyError(f"Solver states deviate from the rollout by {drift:.3g}")

        report = monitor_service.tau_overall(self.formula, signal, 0, self.tolerances)
        root_value = values[self.root.index]
        theta = None
        if self.objective == RELAXATION:
            monitored = float(report.tau)
            by_key = {(s.site, s.instant): s for s in report.subtasks}
            for handle in self.sites:
                entry = by_key.get((handle.path, handle.instant))
                if entry is not None and abs(values[handle.tau] - float(entry.normalized)) > CROSS_CHECK_TOLERANCE:
                    raise SolutionInconsistencyError(
                        f"Subtask {list(handle.path)} at t={handle.instant}: solver tau {values[handle.tau]:.9f} "
                        f"vs monitored {entry.normalized}"
                    )
        else:
            side = "right" if self.objective == TIME_ROBUSTNESS_RIGHT else "left"
            theta = monitor_service.time_robustness(self.formula, signal, 0, side)
            monitored = float(theta)
        if abs(root_value - monitored) > CROSS_CHECK_TOLERANCE:
            raise SolutionInconsistencyError(
                f"Solver objective {root_value:.9f} disagrees with monitored value {monitored}"
            )
        logger.info(f"Cross-validation passed: {self.objective} = {monitored}")
        return SynthesisResult(
            objective=self.objective,
            report=report,
            inputs=inputs,
            signal=signal,
            solution=solution,
            theta=theta,
            counts=dict(self.summary.counts),
            build_time=self.summary.build_time,
        )

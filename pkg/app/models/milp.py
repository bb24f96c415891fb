"""
Solver-agnostic mixed-integer linear model.

Variables are referenced by index; LinExpr supports +, -, scalar * and unary -
with both variables and other expressions, which keeps the encoder close to the
algebra it implements.
"""
import logging
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Mapping, Optional, Union

from app.exceptions import EncodingError

logger = logging.getLogger(__name__)

_NAME = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")

Number = Union[int, float]


class VarKind(str, Enum):
    CONTINUOUS = "continuous"
    BINARY = "binary"
    INTEGER = "integer"


class Sense(str, Enum):
    MINIMIZE = "minimize"
    MAXIMIZE = "maximize"


class LinExpr:
    __slots__ = ("terms", "constant")

    def __init__(self, terms: Optional[Mapping[int, float]] = None, constant: float = 0.0):
        self.terms: Dict[int, float] = dict(terms or {})
        self.constant = float(constant)

    @staticmethod
    def lift(value: Union["LinExpr", "Variable", Number]) -> "LinExpr":
        if isinstance(value, LinExpr):
            return value
        if isinstance(value, Variable):
            return LinExpr({value.index: 1.0})
        if isinstance(value, (int, float)):
            return LinExpr(constant=value)
        raise TypeError(f"Cannot use {type(value).__name__} in a linear expression")

    @staticmethod
    def total(items) -> "LinExpr":
        out = LinExpr()
        for item in items:
            out = out + item
        return out

    def __add__(self, other):
        other = LinExpr.lift(other)
        terms = dict(self.terms)
        for index, coef in other.terms.items():
            terms[index] = terms.get(index, 0.0) + coef
        return LinExpr(terms, self.constant + other.constant)

    __radd__ = __add__

    def __neg__(self):
        return LinExpr({i: -c for i, c in self.terms.items()}, -self.constant)

    def __sub__(self, other):
        return self + (-LinExpr.lift(other))

    def __rsub__(self, other):
        return LinExpr.lift(other) + (-self)

    def __mul__(self, scalar: Number):
        if not isinstance(scalar, (int, float)):
            raise EncodingError("Only scalar multiplication keeps an expression linear")
        return LinExpr({i: c * scalar for i, c in self.terms.items()}, self.constant * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar: Number):
        return self * (1.0 / scalar)

    def evaluate(self, values: Mapping[int, float]) -> float:
        return self.constant + sum(c * values[i] for i, c in self.terms.items())

    def __repr__(self) -> str:
        return f"LinExpr({self.terms}, {self.constant})"


@dataclass(frozen=True, eq=False)
class Variable:
    index: int
    name: str
    kind: VarKind
    lb: Optional[float]
    ub: Optional[float]

    def _expr(self) -> LinExpr:
        return LinExpr.lift(self)

    def __add__(self, other):
        return self._expr() + other

    __radd__ = __add__

    def __sub__(self, other):
        return self._expr() - other

    def __rsub__(self, other):
        return LinExpr.lift(other) - self._expr()

    def __neg__(self):
        return -self._expr()

    def __mul__(self, scalar):
        return self._expr() * scalar

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self._expr() / scalar


@dataclass(frozen=True)
class Constraint:
    name: str
    terms: Dict[int, float]
    sense: str  # "<=", ">=", "="
    rhs: float

    def residual(self, values: Mapping[int, float]) -> float:
        """Amount by which the constraint is violated (0 when satisfied)."""
        lhs = sum(c * values[i] for i, c in self.terms.items())
        if self.sense == "<=":
            return max(0.0, lhs - self.rhs)
        if self.sense == ">=":
            return max(0.0, self.rhs - lhs)
        return abs(lhs - self.rhs)

    def scale(self, values: Mapping[int, float]) -> float:
        return 1.0 + sum(abs(c * values[i]) for i, c in self.terms.items())


@dataclass(frozen=True)
class EncodingParams:
    """Big-M defaults, predicate separation eps, and a margin that widens only the violated side."""

    big_m: float = 1e6
    eps: float = 1e-6
    margin: float = 0.0
    tie_break_weight: float = 0.0

    def __post_init__(self):
        if not self.big_m > 0 or not self.eps > 0:
            raise EncodingError("big_m and eps must be positive")
        if self.margin < 0 or self.tie_break_weight < 0:
            raise EncodingError("margin and tie_break_weight must be non-negative")


@dataclass
class MilpModel:
    name: str = "stl_relax"
    variables: List[Variable] = field(default_factory=list)
    constraints: List[Constraint] = field(default_factory=list)
    objective: LinExpr = field(default_factory=LinExpr)
    sense: Sense = Sense.MINIMIZE
    metadata: Dict[str, Any] = field(default_factory=dict)
    _names: Dict[str, int] = field(default_factory=dict, repr=False)

    # --- variables -------------------------------------------------------

    def add_var(self, name: str, kind: VarKind = VarKind.CONTINUOUS,
                lb: Optional[float] = 0.0, ub: Optional[float] = None) -> Variable:
        if not _NAME.match(name) or name[0] in "eE":
            raise EncodingError(f"Invalid variable name: {name!r}")
        if name in self._names:
            raise EncodingError(f"Duplicate variable name: {name}")
        if kind == VarKind.BINARY:
            lb, ub = 0.0, 1.0
        if lb is not None and ub is not None and lb > ub:
            raise EncodingError(f"Variable {name} has empty bounds [{lb}, {ub}]")
        var = Variable(len(self.variables), name, kind, lb, ub)
        self.variables.append(var)
        self._names[name] = var.index
        return var

    def binary(self, name: str) -> Variable:
        return self.add_var(name, VarKind.BINARY)

    def continuous(self, name: str, lb: Optional[float] = 0.0, ub: Optional[float] = None) -> Variable:
        return self.add_var(name, VarKind.CONTINUOUS, lb, ub)

    def integer(self, name: str, lb: Optional[float] = 0.0, ub: Optional[float] = None) -> Variable:
        return self.add_var(name, VarKind.INTEGER, lb, ub)

    def index_of(self, name: str) -> int:
        if name not in self._names:
            raise EncodingError(f"Unknown variable: {name}")
        return self._names[name]

    # --- constraints -----------------------------------------------------

    def add_constraint(self, lhs, sense: str, rhs=0.0, name: Optional[str] = None) -> Optional[Constraint]:
        expr = LinExpr.lift(lhs) - LinExpr.lift(rhs)
        terms = {i: c for i, c in expr.terms.items() if c != 0.0}
        for index in terms:
            if not 0 <= index < len(self.variables):
                raise EncodingError(f"Constraint references undeclared variable {index}")
        bound = -expr.constant
        if not terms:
            satisfied = {"<=": 0.0 <= bound, ">=": 0.0 >= bound, "=": bound == 0.0}[sense]
            if not satisfied:
                raise EncodingError(f"Constant constraint 0 {sense} {bound} can never hold")
            return None
        constraint = Constraint(name or f"c{len(self.constraints)}", terms, sense, bound)
        self.constraints.append(constraint)
        return constraint

    def add_le(self, lhs, rhs=0.0, name: Optional[str] = None):
        return self.add_constraint(lhs, "<=", rhs, name)

    def add_ge(self, lhs, rhs=0.0, name: Optional[str] = None):
        return self.add_constraint(lhs, ">=", rhs, name)

    def add_eq(self, lhs, rhs=0.0, name: Optional[str] = None):
        return self.add_constraint(lhs, "=", rhs, name)

    def set_objective(self, expr, sense: Sense = Sense.MINIMIZE) -> None:
        self.objective = LinExpr.lift(expr)
        self.sense = sense

    # --- inspection ------------------------------------------------------

    def counts(self) -> Dict[str, int]:
        out = {kind.value: 0 for kind in VarKind}
        for var in self.variables:
            out[var.kind.value] += 1
        out["constraints"] = len(self.constraints)
        out["variables"] = len(self.variables)
        return out

    @property
    def integer_count(self) -> int:
        return sum(1 for v in self.variables if v.kind != VarKind.CONTINUOUS)

    def max_residual(self, values: Mapping[int, float]) -> float:
        """Largest constraint/bound violation relative to each row's magnitude."""
        worst = 0.0
        for c in self.constraints:
            worst = max(worst, c.residual(values) / c.scale(values))
        for v in self.variables:
            x = values[v.index]
            if v.lb is not None:
                worst = max(worst, (v.lb - x) / (1.0 + abs(x)))
            if v.ub is not None:
                worst = max(worst, (x - v.ub) / (1.0 + abs(x)))
        return worst

    def check(self) -> None:
        if not self.objective.terms:
            raise EncodingError("Model has an empty objective")
        for v in self.variables:
            for bound in (v.lb, v.ub):
                if bound is not None and math.isnan(bound):
                    raise EncodingError(f"Variable {v.name} has a NaN bound")

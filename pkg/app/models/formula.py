"""
Formula AST for the supported STL fragment.

Nodes are immutable; equality is structural so parsed formulas can be compared
directly against hand-built ones.
"""
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterator, Tuple, Union

RELATIONS = (">=", "<=", ">", "<")

_NEGATED = {">=": "<", "<": ">=", "<=": ">", ">": "<="}


@dataclass(frozen=True)
class TimeInterval:
    """Closed interval of integer time steps [lo, hi]."""

    lo: int
    hi: int

    def __post_init__(self):
        if not isinstance(self.lo, int) or not isinstance(self.hi, int):
            raise ValueError(f"Interval bounds must be integers, got [{self.lo}, {self.hi}]")
        if self.lo < 0 or self.hi < self.lo:
            raise ValueError(f"Invalid interval [{self.lo}, {self.hi}]: need 0 <= lo <= hi")

    @property
    def cardinality(self) -> int:
        return self.hi - self.lo + 1

    def shifted(self, t: int) -> Tuple[int, int]:
        """Absolute instants t + [lo, hi]."""
        return t + self.lo, t + self.hi

    def intersection_size(self, other: "TimeInterval") -> int:
        return max(0, min(self.hi, other.hi) - max(self.lo, other.lo) + 1)

    def __str__(self) -> str:
        return f"[{self.lo},{self.hi}]"


@dataclass(frozen=True)
class Predicate:
    """
    Affine inequality  sum(coef * var) <relation> threshold.

    terms keeps the written order of (variable, coefficient) pairs so printing
    reproduces the parsed text.
    """

    terms: Tuple[Tuple[str, float], ...]
    relation: str
    threshold: float

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise ValueError(f"Unknown relation: {self.relation}")
        if not self.terms:
            raise ValueError("Predicate needs at least one variable term")
        values = [c for _, c in self.terms] + [self.threshold]
        if not all(math.isfinite(v) for v in values):
            raise ValueError("Predicate coefficients and threshold must be finite")

    @property
    def strict(self) -> bool:
        return self.relation in (">", "<")

    @property
    def variables(self) -> Tuple[str, ...]:
        return tuple(dict.fromkeys(name for name, _ in self.terms))

    def normalized(self) -> Tuple[Dict[str, float], float, bool]:
        """
        Return (coefficients, offset, strict) such that the predicate reads
        sum(coefficients[v] * v) + offset >= 0  (or > 0 when strict).
        """
        sign = 1.0 if self.relation in (">=", ">") else -1.0
        coeffs: Dict[str, float] = {}
        for name, coef in self.terms:
            coeffs[name] = coeffs.get(name, 0.0) + sign * coef
        return coeffs, -sign * self.threshold, self.strict

    def negated(self) -> "Predicate":
        return Predicate(self.terms, _NEGATED[self.relation], self.threshold)


@dataclass(frozen=True)
class Pred:
    predicate: Predicate


@dataclass(frozen=True)
class Not:
    child: "Formula"


@dataclass(frozen=True)
class And:
    children: Tuple["Formula", ...]

    def __post_init__(self):
        if len(self.children) < 2:
            raise ValueError("And needs at least two children")


@dataclass(frozen=True)
class Or:
    children: Tuple["Formula", ...]

    def __post_init__(self):
        if len(self.children) < 2:
            raise ValueError("Or needs at least two children")


@dataclass(frozen=True)
class Finally:
    interval: TimeInterval
    child: "Formula"


@dataclass(frozen=True)
class Globally:
    interval: TimeInterval
    child: "Formula"


Formula = Union[Pred, Not, And, Or, Finally, Globally]
Temporal = (Finally, Globally)
Path = Tuple[int, ...]


def children_of(f: Formula) -> Tuple[Formula, ...]:
    if isinstance(f, (And, Or)):
        return f.children
    if isinstance(f, (Not, Finally, Globally)):
        return (f.child,)
    return ()


def node_at(f: Formula, path: Path) -> Formula:
    for index in path:
        f = children_of(f)[index]
    return f


def walk(f: Formula, path: Path = ()) -> Iterator[Tuple[Path, Formula]]:
    """Pre-order traversal yielding (path, node)."""
    yield path, f
    for i, child in enumerate(children_of(f)):
        yield from walk(child, path + (i,))


def conjunction(children) -> Formula:
    children = tuple(children)
    return children[0] if len(children) == 1 else And(children)


def disjunction(children) -> Formula:
    children = tuple(children)
    return children[0] if len(children) == 1 else Or(children)


@dataclass(frozen=True)
class Tolerances:
    """User tolerances bounding how far subtask intervals may be modified."""

    gamma_f: float = 1.0
    gamma_g: float = 1.0

    def __post_init__(self):
        if not self.gamma_f > 0:
            raise ValueError(f"gamma_f must be > 0, got {self.gamma_f}")
        if not 0 < self.gamma_g <= 1:
            raise ValueError(f"gamma_g must be in (0, 1], got {self.gamma_g}")

    @property
    def gamma_f_exact(self) -> Fraction:
        return Fraction(str(self.gamma_f))

    @property
    def gamma_g_exact(self) -> Fraction:
        return Fraction(str(self.gamma_g))


@dataclass(frozen=True)
class RelaxationBounds:
    finally_slack: int
    globally_half_slack: int

    @classmethod
    def for_interval(cls, interval: TimeInterval, tol: Tolerances) -> "RelaxationBounds":
        n = interval.cardinality
        # floor on exact rationals so 0.1 * 30 is 3, not 2
        return cls(
            finally_slack=math.floor(tol.gamma_f_exact * n),
            globally_half_slack=math.floor(tol.gamma_g_exact * n / 2),
        )

    def finally_denominator(self, interval: TimeInterval, tol: Tolerances) -> Fraction:
        return tol.gamma_f_exact * interval.cardinality

    def globally_denominator(self, interval: TimeInterval, tol: Tolerances) -> Fraction:
        return tol.gamma_g_exact * interval.cardinality

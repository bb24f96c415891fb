"""
Service for parsing and printing STL formulas.

Grammar (loosest binding first):

    formula := conj ('|' conj)*
    conj    := unary ('&' unary)*
    unary   := '!' unary
             | ('F' | 'G') '[' num ',' num ']' '(' formula ')'
             | '(' formula ')'
             | '@' NAME
             | linexpr ('>=' | '<=' | '>' | '<') ['-'] num
    linexpr := ['-'] term (('+' | '-') term)*
    term    := num '*' NAME | NAME

Operator chains become one n-ary node; parenthesized groups stay nested so
printing reproduces the tree exactly.
"""
import logging
import re
from dataclasses import dataclass
from typing import List, Mapping, Optional, Tuple

from app.exceptions import FormulaSyntaxError
from app.models.formula import (
    And,
    Finally,
    Formula,
    Globally,
    Not,
    Or,
    Pred,
    Predicate,
    TimeInterval,
)

logger = logging.getLogger(__name__)

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<op>>=|<=|[<>&|!()\[\],*+\-@])"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r")"
)


@dataclass(frozen=True)
class Token:
    kind: str  # num | op | name | end
    text: str
    pos: int


def tokenize(text: str) -> List[Token]:
    tokens: List[Token] = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        match = _TOKEN.match(text, pos)
        if match is None or match.end() == pos:
            bad = len(text) - len(text[pos:].lstrip())
            raise FormulaSyntaxError(f"Unexpected character {text[bad]!r}", bad)
        kind = match.lastgroup
        tokens.append(Token(kind, match.group(kind), match.start(kind)))
        pos = match.end()
    tokens.append(Token("end", "", len(text)))
    return tokens


class FormulaParser:
    """Recursive-descent parser over the token list."""

    def __init__(self, text: str, regions: Optional[Mapping[str, str]] = None,
                 time_scale: Optional[float] = None, _expanding: Tuple[str, ...] = ()):
        self.text = text
        self.tokens = tokenize(text)
        self.index = 0
        self.regions = dict(regions or {})
        self.time_scale = time_scale
        self._expanding = _expanding

    # --- token helpers ---------------------------------------------------

    @property
    def current(self) -> Token:
        return self.tokens[self.index]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.index + offset, len(self.tokens) - 1)]

    def accept(self, text: str) -> bool:
        if self.current.kind in ("op", "name") and self.current.text == text:
            self.index += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        token = self.current
        if not self.accept(text):
            found = token.text or "end of input"
            raise FormulaSyntaxError(f"Expected '{text}' but found '{found}'", token.pos)
        return token

    def number(self) -> float:
        token = self.current
        if token.kind != "num":
            raise FormulaSyntaxError(f"Expected a number but found '{token.text or 'end of input'}'", token.pos)
        self.index += 1
        return float(token.text)

    # --- grammar ---------------------------------------------------------

    def parse(self) -> Formula:
        formula = self.disjunction()
        if self.current.kind != "end":
            raise FormulaSyntaxError(f"Unexpected '{self.current.text}'", self.current.pos)
        return formula

    def disjunction(self) -> Formula:
        children = [self.conjunction()]
        while self.accept("|"):
            children.append(self.conjunction())
        return children[0] if len(children) == 1 else Or(tuple(children))

    def conjunction(self) -> Formula:
        children = [self.unary()]
        while self.accept("&"):
            children.append(self.unary())
        return children[0] if len(children) == 1 else And(tuple(children))

    def unary(self) -> Formula:
        token = self.current
        if self.accept("!"):
            return Not(self.unary())
        if token.kind == "name" and token.text in ("F", "G") and self.peek().text == "[":
            self.index += 1
            interval = self.interval()
            self.expect("(")
            child = self.disjunction()
            self.expect(")")
            return Finally(interval, child) if token.text == "F" else Globally(interval, child)
        if self.accept("("):
            inner = self.disjunction()
            self.expect(")")
            return inner
        if self.accept("@"):
            return self.region()
        return self.predicate()

    def interval(self) -> TimeInterval:
        self.expect("[")
        start = self.current.pos
        lo = self.bound()
        self.expect(",")
        hi = self.bound()
        self.expect("]")
        try:
            return TimeInterval(lo, hi)
        except ValueError as e:
            raise FormulaSyntaxError(str(e), start)

    def bound(self) -> int:
        pos = self.current.pos
        value = self.number()
        if self.time_scale is not None:
            steps = round(value / self.time_scale)
            if abs(steps * self.time_scale - value) > 1e-9:
                logger.info(f"Interval bound {value}s rounded to {steps} steps (dt={self.time_scale})")
            return steps
        if value != int(value):
            raise FormulaSyntaxError(f"Interval bound {value} is not an integer step", pos)
        return int(value)

    def region(self) -> Formula:
        token = self.current
        if token.kind != "name":
            raise FormulaSyntaxError("Expected a region name after '@'", token.pos)
        self.index += 1
        if token.text not in self.regions:
            raise FormulaSyntaxError(f"Unknown region '@{token.text}'", token.pos)
        if token.text in self._expanding:
            raise FormulaSyntaxError(f"Region '@{token.text}' refers to itself", token.pos)
        sub = FormulaParser(self.regions[token.text], self.regions, self.time_scale,
                            self._expanding + (token.text,))
        try:
            return sub.parse()
        except FormulaSyntaxError as e:
            raise FormulaSyntaxError(f"In region '@{token.text}': {e}", token.pos)

    def predicate(self) -> Pred:
        start = self.current.pos
        terms = [self.term(negative=self.accept("-"))]
        while self.current.text in ("+", "-") and self.current.kind == "op":
            negative = self.current.text == "-"
            self.index += 1
            terms.append(self.term(negative))
        relation = self.current
        if relation.kind != "op" or relation.text not in (">=", "<=", ">", "<"):
            raise FormulaSyntaxError(f"Expected a comparison but found '{relation.text or 'end of input'}'", relation.pos)
        self.index += 1
        sign = -1.0 if self.accept("-") else 1.0
        threshold = sign * self.number()
        try:
            return Pred(Predicate(tuple(terms), relation.text, threshold))
        except ValueError as e:
            raise FormulaSyntaxError(str(e), start)

    def term(self, negative: bool) -> Tuple[str, float]:
        sign = -1.0 if negative else 1.0
        token = self.current
        if token.kind == "num":
            coef = self.number()
            self.expect("*")
            token = self.current
        else:
            coef = 1.0
        if token.kind != "name" or token.text in ("F", "G") and self.peek().text == "[":
            raise FormulaSyntaxError(f"Expected a variable name but found '{token.text or 'end of input'}'", token.pos)
        self.index += 1
        return token.text, sign * coef


def parse(text: str, regions: Optional[Mapping[str, str]] = None,
          time_scale: Optional[float] = None, check_fragment: bool = True) -> Formula:
    """
    Parse formula text into an AST.

    Args:
        text: Formula in the grammar above.
        regions: Named sub-formulas referenced as @NAME.
        time_scale: When set, interval bounds are read in seconds and converted to
            steps by round(bound / time_scale).
        check_fragment: Reject formulas outside the supported fragment.

    Returns:
        The parsed formula.
    """
    formula = FormulaParser(text, regions, time_scale).parse()
    if check_fragment:
        from app.services.fragment_service import validate_fragment
        validate_fragment(formula)
    return formula


def format_number(value: float) -> str:
    if float(value).is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(float(value))


def _format_terms(terms) -> str:
    parts = []
    for i, (name, coef) in enumerate(terms):
        negative = coef < 0 or (coef == 0 and str(coef).startswith("-"))
        magnitude = abs(coef)
        body = name if magnitude == 1.0 else f"{format_number(magnitude)}*{name}"
        if i == 0:
            parts.append(f"-{body}" if negative else body)
        else:
            parts.append(f" - {body}" if negative else f" + {body}")
    return "".join(parts)


def to_text(f: Formula) -> str:
    """Print a formula so that parse(to_text(f)) == f."""
    if isinstance(f, Pred):
        p = f.predicate
        return f"{_format_terms(p.terms)} {p.relation} {format_number(p.threshold)}"
    if isinstance(f, Not):
        child = f.child
        if isinstance(child, (Not, Finally, Globally)):
            return f"!{to_text(child)}"
        return f"!({to_text(child)})"
    if isinstance(f, (And, Or)):
        joiner = " & " if isinstance(f, And) else " | "
        return joiner.join(
            f"({to_text(c)})" if isinstance(c, (And, Or)) else to_text(c) for c in f.children
        )
    if isinstance(f, (Finally, Globally)):
        op = "F" if isinstance(f, Finally) else "G"
        return f"{op}[{f.interval.lo},{f.interval.hi}]({to_text(f.child)})"
    raise TypeError(f"Not a formula node: {f!r}")

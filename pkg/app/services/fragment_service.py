"""
Fragment membership, relaxation sites and negation normal form.

Two layers are accepted:
  * predicate level: predicates combined with !, &, | and no temporal operator;
  * specification level: F/G over a predicate-level formula (a subtask, the unit
    that gets relaxed), F/G over a specification, and !, &, | of specifications.
A bare predicate at specification level is rejected.
"""
import logging
from typing import List, Optional, Tuple

from app.exceptions import FragmentViolationError
from app.models.formula import (
    And,
    Finally,
    Formula,
    Globally,
    Not,
    Or,
    Path,
    Pred,
    RelaxationBounds,
    Tolerances,
    children_of,
)

logger = logging.getLogger(__name__)


def is_predicate_level(f: Formula) -> bool:
    if isinstance(f, Pred):
        return True
    if isinstance(f, (Finally, Globally)):
        return False
    return all(is_predicate_level(c) for c in children_of(f))


def is_site(f: Formula) -> bool:
    """Innermost temporal operator: the subtask relaxation applies to."""
    return isinstance(f, (Finally, Globally)) and is_predicate_level(f.child)


def find_violation(f: Formula, path: Path = ()) -> Optional[Tuple[Path, Formula, str]]:
    """First node (pre-order) breaking the fragment, as (path, node, reason); None if f is valid."""
    if isinstance(f, Pred):
        return path, f, "Predicate used outside a temporal operator"
    if isinstance(f, Not) and is_predicate_level(f.child):
        return path, f, "Predicate-level formula used outside a temporal operator"
    if isinstance(f, (Finally, Globally)) and is_predicate_level(f.child):
        return None
    for i, child in enumerate(children_of(f)):
        found = find_violation(child, path + (i,))
        if found is not None:
            return found
    return None


def validate_fragment(f: Formula) -> List[Path]:
    """
    Check fragment membership and list the relaxation sites.

    Returns:
        Paths (tuples of child indices) of every innermost temporal subtask, in
        pre-order.

    Raises:
        FragmentViolationError: with the first offending node path.
    """
    violation = find_violation(f)
    if violation is not None:
        from app.services.parser_service import to_text
        path, node, reason = violation
        raise FragmentViolationError(reason, path, to_text(node))
    return relaxation_sites(f)


def relaxation_sites(f: Formula, path: Path = ()) -> List[Path]:
    if is_site(f):
        return [path]
    sites: List[Path] = []
    for i, child in enumerate(children_of(f)):
        sites.extend(relaxation_sites(child, path + (i,)))
    return sites


def _flatten(kind, children) -> Tuple[Formula, ...]:
    flat: List[Formula] = []
    for child in children:
        if isinstance(child, kind):
            flat.extend(child.children)
        else:
            flat.append(child)
    return tuple(flat)


def negation_normal_form(f: Formula, negate: bool = False) -> Formula:
    """Push negations into predicates (flipping the relation) and flatten nested &/|."""
    if isinstance(f, Pred):
        return Pred(f.predicate.negated()) if negate else f
    if isinstance(f, Not):
        return negation_normal_form(f.child, not negate)
    if isinstance(f, (And, Or)):
        kind = type(f)
        if negate:
            kind = Or if kind is And else And
        children = [negation_normal_form(c, negate) for c in f.children]
        return kind(_flatten(kind, children))
    if isinstance(f, Finally):
        child = negation_normal_form(f.child, negate)
        return Globally(f.interval, child) if negate else Finally(f.interval, child)
    if isinstance(f, Globally):
        child = negation_normal_form(f.child, negate)
        return Finally(f.interval, child) if negate else Globally(f.interval, child)
    raise TypeError(f"Not a formula node: {f!r}")


def required_horizon(f: Formula, tol: Optional[Tolerances] = None) -> int:
    """
    Last instant touched when evaluating f at 0, including finally relaxation
    windows when tolerances are given.
    """
    if isinstance(f, Pred):
        return 0
    if isinstance(f, (Finally, Globally)):
        reach = f.interval.hi + required_horizon(f.child, tol)
        if tol is not None and isinstance(f, Finally) and is_site(f):
            reach += RelaxationBounds.for_interval(f.interval, tol).finally_slack
        return reach
    return max(required_horizon(c, tol) for c in children_of(f))

"""
Monitoring of finite discrete signals.

Boolean satisfaction, space robustness, time robustness (optionally with a
characteristic threshold) and temporal relaxation. Relaxation values are exact
fractions; everything else is plain floats/ints.
"""
import logging
from fractions import Fraction
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from app.exceptions import HorizonError
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
    TimeInterval,
    Tolerances,
    conjunction,
)
from app.models.relaxation import (
    FINALLY,
    GLOBALLY,
    CounterSeries,
    RelaxationReport,
    SubtaskRelaxation,
    interval_similarity,
)
from app.models.signal import Signal
from app.services.fragment_service import is_site, negation_normal_form, validate_fragment

logger = logging.getLogger(__name__)

# predicate values this close to the threshold count as on it
PREDICATE_TOLERANCE = 1e-6

__all__ = [
    "characteristic",
    "counters",
    "eval_bool",
    "interval_similarity",
    "predicate_values",
    "satisfaction_trace",
    "space_robustness",
    "tau_finally",
    "tau_globally",
    "tau_overall",
    "time_robustness",
]


# --- predicate level --------------------------------------------------------

def predicate_values(p: Predicate, s: Signal) -> np.ndarray:
    """p(x_t) for every t, in the normalized p >= 0 orientation."""
    coeffs, offset, _ = p.normalized()
    values = np.full(s.horizon + 1, offset, dtype=float)
    for name, coef in coeffs.items():
        values = values + coef * s.row(name)
    return values


def satisfaction_trace(phi: Formula, s: Signal, threshold: float = 0.0) -> np.ndarray:
    """Boolean satisfaction of a predicate-level formula at every instant."""
    if isinstance(phi, Pred):
        values = predicate_values(phi.predicate, s)
        values = np.where(np.abs(values - threshold) < PREDICATE_TOLERANCE, threshold, values)
        return values > threshold if phi.predicate.strict else values >= threshold
    if isinstance(phi, Not):
        return ~satisfaction_trace(phi.child, s, threshold)
    if isinstance(phi, And):
        return np.logical_and.reduce([satisfaction_trace(c, s, threshold) for c in phi.children])
    if isinstance(phi, Or):
        return np.logical_or.reduce([satisfaction_trace(c, s, threshold) for c in phi.children])
    raise ValueError("satisfaction_trace only handles predicate-level formulas")


def characteristic(p: Predicate, s: Signal, t: int, threshold: float = 0.0) -> int:
    s.check_instant(t)
    return 1 if satisfaction_trace(Pred(p), s, threshold)[t] else -1


def _window(interval: TimeInterval, s: Signal, t: int) -> range:
    start, end = interval.shifted(t)
    s.check_instant(t)
    s.check_instant(end)
    return range(start, end + 1)


# --- Boolean and space robustness ------------------------------------------

def eval_bool(f: Formula, s: Signal, t: int = 0) -> bool:
    if isinstance(f, Pred):
        s.check_instant(t)
        return bool(satisfaction_trace(f, s)[t])
    if isinstance(f, Not):
        return not eval_bool(f.child, s, t)
    if isinstance(f, And):
        return all(eval_bool(c, s, t) for c in f.children)
    if isinstance(f, Or):
        return any(eval_bool(c, s, t) for c in f.children)
    if isinstance(f, Finally):
        return any(eval_bool(f.child, s, k) for k in _window(f.interval, s, t))
    if isinstance(f, Globally):
        return all(eval_bool(f.child, s, k) for k in _window(f.interval, s, t))
    raise TypeError(f"Not a formula node: {f!r}")


def space_robustness(f: Formula, s: Signal, t: int = 0) -> float:
    if isinstance(f, Pred):
        s.check_instant(t)
        return float(predicate_values(f.predicate, s)[t])
    if isinstance(f, Not):
        return -space_robustness(f.child, s, t)
    if isinstance(f, And):
        return min(space_robustness(c, s, t) for c in f.children)
    if isinstance(f, Or):
        return max(space_robustness(c, s, t) for c in f.children)
    if isinstance(f, Finally):
        return max(space_robustness(f.child, s, k) for k in _window(f.interval, s, t))
    if isinstance(f, Globally):
        return min(space_robustness(f.child, s, k) for k in _window(f.interval, s, t))
    raise TypeError(f"Not a formula node: {f!r}")


# --- time robustness --------------------------------------------------------

def _run_lengths(chi: np.ndarray, side: str) -> np.ndarray:
    """Length of the constant-value run starting at t (right) or ending at t (left)."""
    n = len(chi)
    runs = np.ones(n, dtype=int)
    if side == "right":
        for k in range(n - 2, -1, -1):
            if chi[k] == chi[k + 1]:
                runs[k] = runs[k + 1] + 1
    else:
        for k in range(1, n):
            if chi[k] == chi[k - 1]:
                runs[k] = runs[k - 1] + 1
    return runs


def time_robustness(f: Formula, s: Signal, t: int = 0, side: str = "right", threshold: float = 0.0) -> int:
    """
    Right (future) or left (past) time robustness.

    At a predicate this is chi_t times the largest d such that chi keeps its
    value on [t, t+d] (right) or [t-d, t] (left), with d limited to the signal;
    operators compose it by the min/max rules of space robustness. A positive
    threshold gives the space-time variant (chi = +1 iff p >= threshold).
    """
    if side not in ("right", "left"):
        raise ValueError(f"side must be 'right' or 'left', got {side!r}")
    cache: Dict[Predicate, np.ndarray] = {}

    def theta(node: Formula, k: int) -> int:
        if isinstance(node, Pred):
            s.check_instant(k)
            if node.predicate not in cache:
                chi = satisfaction_trace(node, s, threshold)
                signs = np.where(chi, 1, -1)
                cache[node.predicate] = signs * (_run_lengths(chi, side) - 1)
            return int(cache[node.predicate][k])
        if isinstance(node, Not):
            return -theta(node.child, k)
        if isinstance(node, And):
            return min(theta(c, k) for c in node.children)
        if isinstance(node, Or):
            return max(theta(c, k) for c in node.children)
        if isinstance(node, Finally):
            return max(theta(node.child, j) for j in _window(node.interval, s, k))
        if isinstance(node, Globally):
            return min(theta(node.child, j) for j in _window(node.interval, s, k))
        raise TypeError(f"Not a formula node: {node!r}")

    return theta(f, t)


# --- counters ---------------------------------------------------------------

def counters(zs: Sequence[int], start: int = 0, l1_init: int = 0, l0_init: int = 0,
             r1_init: int = 0, r0_init: int = 0) -> CounterSeries:
    """
    Run-length counters over zs (instants start, start+1, ...).

    l1/l0 run forward from l*_init at start-1; r1/r0 run backward from r*_init
    one past the last instant.
    """
    zs = [int(z) for z in zs]
    l1, l0 = [], []
    prev1, prev0 = l1_init, l0_init
    for z in zs:
        prev1 = z * (prev1 + 1)
        prev0 = (1 - z) * (prev0 - 1)
        l1.append(prev1)
        l0.append(prev0)
    r1, r0 = [0] * len(zs), [0] * len(zs)
    next1, next0 = r1_init, r0_init
    for i in range(len(zs) - 1, -1, -1):
        z = zs[i]
        next1 = z * (next1 + 1)
        next0 = (1 - z) * (next0 - 1)
        r1[i], r0[i] = next1, next0
    return CounterSeries(start, tuple(l1), tuple(l0), tuple(r1), tuple(r0))


# --- temporal relaxation ----------------------------------------------------

def tau_finally(site: Finally, s: Signal, t: int, tol: Tolerances, path: Path = (),
                trace: Optional[np.ndarray] = None) -> SubtaskRelaxation:
    """
    Smallest widening of a finally subtask's interval that contains a
    satisfaction instant, within the floor(gamma_f * |I|) budget per side.

    Ties prefer the later (right) side.
    """
    interval = site.interval
    bounds = RelaxationBounds.for_interval(interval, tol)
    beta = bounds.finally_slack
    denominator = bounds.finally_denominator(interval, tol)
    start, end = interval.shifted(t)
    s.check_instant(t)
    if end + beta > s.horizon:
        raise HorizonError(end + beta, s.horizon)
    if trace is None:
        trace = satisfaction_trace(site.child, s)

    def entry(under: int, over: int, removed: bool = False) -> SubtaskRelaxation:
        relaxed = None
        if not removed:
            relaxed = TimeInterval(max(0, interval.lo - under), interval.hi + over)
        normalized = Fraction(1) if removed else Fraction(max(under, over)) / denominator
        return SubtaskRelaxation(path, FINALLY, t, interval, under, over, removed, normalized, relaxed)

    if trace[start:end + 1].any():
        return entry(0, 0)
    left = next((k for k in range(1, beta + 1) if start - k >= 0 and trace[start - k]), None)
    right = next((k for k in range(1, beta + 1) if trace[end + k]), None)
    if right is not None and (left is None or right <= left):
        return entry(0, right)
    if left is not None:
        return entry(left, 0)
    return entry(0, 0, removed=True)


def tau_globally(site: Globally, s: Signal, t: int, tol: Tolerances, path: Path = (),
                 trace: Optional[np.ndarray] = None) -> SubtaskRelaxation:
    """
    Smallest shrink [a + under, b - over] of a globally subtask's interval on
    which the subtask holds throughout, with each side within
    floor(gamma_g * |I| / 2). Shrinking to nothing counts as removal.
    """
    interval = site.interval
    bounds = RelaxationBounds.for_interval(interval, tol)
    beta = bounds.globally_half_slack
    denominator = bounds.globally_denominator(interval, tol)
    start, end = interval.shifted(t)
    s.check_instant(t)
    s.check_instant(end)
    if trace is None:
        trace = satisfaction_trace(site.child, s)

    best: Optional[Tuple[int, int]] = None
    for under in range(beta + 1):
        first = start + under
        if first > end or not trace[first]:
            continue
        last = first
        while last < end and trace[last + 1]:
            last += 1
        over = end - last
        if over <= beta and (best is None or under + over < sum(best)):
            best = (under, over)

    if best is None:
        return SubtaskRelaxation(path, GLOBALLY, t, interval, 0, 0, True, Fraction(1), None)
    under, over = best
    relaxed = TimeInterval(interval.lo + under, interval.hi - over)
    return SubtaskRelaxation(path, GLOBALLY, t, interval, under, over, False,
                             Fraction(under + over) / denominator, relaxed)


class _Part(NamedTuple):
    """Relaxation of one node at one instant; `relaxed` holds when evaluated `lead` steps earlier."""

    value: Fraction
    entries: List[SubtaskRelaxation]
    relaxed: Optional[Formula]
    lead: int = 0


def _delay(f: Formula, steps: int) -> Formula:
    """f with every outermost temporal interval moved `steps` instants later."""
    if steps == 0:
        return f
    if isinstance(f, (And, Or)):
        return type(f)(tuple(_delay(c, steps) for c in f.children))
    if isinstance(f, (Finally, Globally)):
        return type(f)(TimeInterval(f.interval.lo + steps, f.interval.hi + steps), f.child)
    raise TypeError(f"Cannot delay a predicate-level node: {f!r}")


def _anchored(kind: type, lo: int, hi: int, child: Formula) -> Tuple[Formula, int]:
    """kind[lo, hi](child) with a negative lo absorbed into an earlier evaluation instant."""
    lead = max(0, -lo)
    return kind(TimeInterval(lo + lead, hi + lead), child), lead


class _RelaxationEvaluator:
    """Evaluates the overall relaxation of a negation-free fragment formula."""

    def __init__(self, s: Signal, tol: Tolerances):
        self.s = s
        self.tol = tol
        self.traces: Dict[Path, np.ndarray] = {}

    def evaluate(self, f: Formula, path: Path, t: int) -> _Part:
        if is_site(f):
            if path not in self.traces:
                self.traces[path] = satisfaction_trace(f.child, self.s)
            trace = self.traces[path]
            if isinstance(f, Finally):
                entry = tau_finally(f, self.s, t, self.tol, path, trace)
                if entry.removed:
                    return _Part(entry.normalized, [entry], None)
                relaxed, lead = _anchored(Finally, f.interval.lo - entry.tau_under,
                                          f.interval.hi + entry.tau_over, f.child)
                return _Part(entry.normalized, [entry], relaxed, lead)
            entry = tau_globally(f, self.s, t, self.tol, path, trace)
            relaxed = None if entry.removed else Globally(entry.relaxed_interval, f.child)
            return _Part(entry.normalized, [entry], relaxed)

        if isinstance(f, And):
            parts = [self.evaluate(c, path + (i,), t) for i, c in enumerate(f.children)]
            value = sum((p.value for p in parts), Fraction(0)) / len(parts)
            entries = [e for p in parts for e in p.entries]
            kept = [p for p in parts if p.relaxed is not None]
            if not kept:
                return _Part(value, entries, None)
            lead = max(p.lead for p in kept)
            return _Part(value, entries, conjunction(_delay(p.relaxed, lead - p.lead) for p in kept), lead)

        if isinstance(f, Or):
            parts = [self.evaluate(c, path + (i,), t) for i, c in enumerate(f.children)]
            best = min(range(len(parts)), key=lambda i: parts[i].value)
            chosen = parts[best]
            if chosen.relaxed is None:
                return chosen
            children = [_delay(c, chosen.lead) for c in f.children]
            children[best] = chosen.relaxed
            return chosen._replace(relaxed=Or(tuple(children)))

        if isinstance(f, Finally):
            parts = self._instants(f, path, t)
            best = min(range(len(parts)), key=lambda i: parts[i].value)
            chosen = parts[best]
            if chosen.relaxed is None:
                return chosen
            # offset from t at which the relaxed child holds; never before instant 0
            at = f.interval.lo + best - chosen.lead
            relaxed, lead = _anchored(Finally, max(f.interval.lo - chosen.lead, min(0, at)),
                                      f.interval.hi - chosen.lead, chosen.relaxed)
            return chosen._replace(relaxed=relaxed, lead=lead)

        if isinstance(f, Globally):
            parts = self._instants(f, path, t)
            chosen = max(parts, key=lambda p: p.value)
            if chosen.relaxed is None:
                return chosen
            return chosen._replace(**self._every_instant(f.interval, parts))

        raise TypeError(f"Unexpected node in negation normal form: {f!r}")

    def _instants(self, f: Formula, path: Path, t: int) -> List[_Part]:
        start, end = f.interval.shifted(t)
        self.s.check_instant(end)
        return [self.evaluate(f.child, path + (0,), k) for k in range(start, end + 1)]

    @staticmethod
    def _every_instant(interval: TimeInterval, parts: List[_Part]) -> Dict[str, object]:
        """
        Relaxed outer globally: one G block per run of instants sharing a relaxed
        child, so every instant keeps its own relaxation. Removed instants other
        than the deciding one drop out.
        """
        runs: List[List] = []  # [first offset, last offset, relaxed, lead]
        for offset, part in zip(range(interval.lo, interval.hi + 1), parts):
            if part.relaxed is None:
                continue
            last = runs[-1] if runs else None
            if last and last[1] == offset - 1 and last[2] == part.relaxed and last[3] == part.lead:
                last[1] = offset
            else:
                runs.append([offset, offset, part.relaxed, part.lead])
        if not runs:
            return {"relaxed": None, "lead": 0}
        lead = max(0, max(run[3] - run[0] for run in runs))
        blocks = [
            Globally(TimeInterval(first - run_lead + lead, last - run_lead + lead), relaxed)
            for first, last, relaxed, run_lead in runs
        ]
        return {"relaxed": conjunction(blocks), "lead": lead}


def tau_overall(f: Formula, s: Signal, t: int = 0, tol: Optional[Tolerances] = None) -> RelaxationReport:
    """
    Overall temporal relaxation of a fragment formula.

    The formula is brought to negation normal form first; site paths in the
    report refer to that form. Conjunctions average their children uniformly,
    disjunctions and outer finally take the minimum, outer globally the
    maximum. Nested sites report the entries of the deciding instant.

    The relaxed formula holds on s: a finally site widened to the left of its
    evaluation instant moves the enclosing operator's interval earlier, and an
    outer globally keeps the relaxation of each of its instants.

    Args:
        f: Formula in the supported fragment.
        s: Signal to evaluate.
        t: Evaluation instant.
        tol: Relaxation tolerances (defaults 1, 1).

    Returns:
        RelaxationReport with the exact overall value, per-site entries and the
        relaxed formula (None when every subtask is removed).
    """
    tol = tol or Tolerances()
    nnf = negation_normal_form(f)
    validate_fragment(nnf)
    part = _RelaxationEvaluator(s, tol).evaluate(nnf, (), t)
    if part.lead:
        logger.warning(f"Relaxed formula holds from instant {t - part.lead}, {part.lead} steps before {t}")
    logger.debug(f"Overall relaxation {part.value} over {len(part.entries)} subtask entries")
    return RelaxationReport(part.value, part.entries, part.relaxed)


def finally_relaxation_from_counters(series: CounterSeries, start: int, end: int, beta: int,
                                     denominator: Fraction, satisfied: bool) -> Fraction:
    """(1 - z_F) * min(-l0 at start, -r0 at end) / denominator, saturating at removal."""
    if satisfied:
        return Fraction(0)
    steps = min(-series.at("l0", start), -series.at("r0", end))
    return Fraction(1) if steps > beta else Fraction(steps) / denominator


def finally_window_counters(trace: np.ndarray, start: int, end: int, beta: int) -> CounterSeries:
    """Counters over the clipped finally window [start - beta, end + beta]."""
    lo = start - beta
    first = max(0, lo)
    # instants below 0 count as violations so the left side saturates at beta + 1
    zs = trace[first:end + beta + 1].astype(int)
    return counters(zs, first, l0_init=min(0, lo))

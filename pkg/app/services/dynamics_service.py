"""Trajectory rollout and standard system constructors."""
import logging
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

from app.exceptions import DimensionError, InputBoundsError
from app.models.signal import Signal
from app.models.system import LinearSystem

logger = logging.getLogger(__name__)

INPUT_TOLERANCE = 1e-9


def _signal_names(sys: LinearSystem, variables: Optional[Mapping[str, int]]) -> Dict[str, int]:
    names = {f"x{i + 1}": i for i in range(sys.n)}
    names.update(variables or {})
    return names


def rollout(sys: LinearSystem, u, variables: Optional[Mapping[str, int]] = None) -> Signal:
    """
    Simulate x_{t+1} = A x_t + B u_t from x0.

    Args:
        sys: The system.
        u: Inputs, shape (T, m); a flat sequence is accepted when m == 1.
        variables: Names for state rows in the returned signal.

    Returns:
        Signal with T + 1 samples. State-box violations are logged, not clamped.
    """
    u = np.asarray(u, dtype=float)
    if u.ndim == 1 and sys.m == 1:
        u = u.reshape(-1, 1)
    if u.ndim != 2 or u.shape[1] != sys.m:
        raise DimensionError(f"Inputs must have shape (T, {sys.m}), got {u.shape}")
    below = u < sys.u_lo - INPUT_TOLERANCE
    above = u > sys.u_hi + INPUT_TOLERANCE
    if below.any() or above.any():
        t, j = np.argwhere(below | above)[0]
        raise InputBoundsError(
            f"Input u[{t}][{j}] = {u[t, j]} outside [{sys.u_lo[j]}, {sys.u_hi[j]}]"
        )

    steps = u.shape[0]
    x = np.zeros((sys.n, steps + 1))
    x[:, 0] = sys.x0
    for t in range(steps):
        x[:, t + 1] = sys.A @ x[:, t] + sys.B @ u[t]

    violations = state_violations(sys, x)
    if violations:
        t, i = violations[0]
        logger.warning(f"Trajectory leaves the state box at {len(violations)} points (first: t={t}, dim={i})")
    return Signal(x, _signal_names(sys, variables))


def state_violations(sys: LinearSystem, x: np.ndarray, tol: float = 1e-9) -> List[Tuple[int, int]]:
    """(t, dim) pairs where the state leaves its box."""
    bad = (x < sys.x_lo[:, None] - tol) | (x > sys.x_hi[:, None] + tol)
    return [(int(t), int(i)) for i, t in np.argwhere(bad)]


def _image(M: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Interval hull of {M v : lo <= v <= hi}; zero coefficients ignore infinite extents."""
    with np.errstate(invalid="ignore"):
        at_lo = np.where(M == 0, 0.0, M * lo)
        at_hi = np.where(M == 0, 0.0, M * hi)
    return np.minimum(at_lo, at_hi).sum(axis=1), np.maximum(at_lo, at_hi).sum(axis=1)


def reachable_bounds(sys: LinearSystem, horizon: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Per-instant interval over-approximation of the reachable states.

    Interval arithmetic on x_{t+1} = A x_t + B u_t with u_t in its box, each step
    intersected with the state box. Returns (lo, hi) of shape (horizon + 1, n);
    unbounded inputs give infinite entries.
    """
    if horizon < 0:
        raise DimensionError(f"Horizon must be non-negative, got {horizon}")
    lo = np.empty((horizon + 1, sys.n))
    hi = np.empty((horizon + 1, sys.n))
    lo[0] = hi[0] = sys.x0
    u_lo, u_hi = _image(sys.B, sys.u_lo, sys.u_hi)
    for t in range(horizon):
        x_lo, x_hi = _image(sys.A, lo[t], hi[t])
        next_lo = np.maximum(x_lo + u_lo, sys.x_lo)
        next_hi = np.minimum(x_hi + u_hi, sys.x_hi)
        # an empty step means the box is unreachable; the box itself still bounds every feasible state
        empty = next_lo > next_hi
        lo[t + 1] = np.where(empty, sys.x_lo, next_lo)
        hi[t + 1] = np.where(empty, sys.x_hi, next_hi)
    return lo, hi


def integrator(n: int = 1, x0=None, input_limit: Optional[float] = None, dt: float = 1.0) -> LinearSystem:
    """x_{t+1} = x_t + u_t in n independent dimensions."""
    x0 = np.zeros(n) if x0 is None else x0
    bounds = None if input_limit is None else [(-input_limit, input_limit)] * n
    return LinearSystem.build(np.eye(n), np.eye(n), x0, input_bounds=bounds, dt=dt)


def double_integrator(dt: float, x0=None, input_limit: float = 2.2,
                      state_bounds=None) -> LinearSystem:
    """
    Planar double integrator with state [x, v_x, y, v_y] and input [u_x, u_y].

    Each axis follows  p+ = p + dt v + dt^2/2 u,  v+ = v + dt u.
    """
    if not dt > 0:
        raise DimensionError(f"dt must be positive, got {dt}")
    block_a = np.array([[1.0, dt], [0.0, 1.0]])
    block_b = np.array([[0.5 * dt ** 2], [dt]])
    A = np.kron(np.eye(2), block_a)
    B = np.kron(np.eye(2), block_b)
    x0 = np.zeros(4) if x0 is None else x0
    return LinearSystem.build(A, B, x0, state_bounds=state_bounds,
                              input_bounds=[(-input_limit, input_limit)] * 2, dt=dt)

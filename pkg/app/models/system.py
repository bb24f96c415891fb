"""Linear time-invariant systems x+ = A x + B u."""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from app.exceptions import DimensionError

logger = logging.getLogger(__name__)


def _box(bounds: Optional[Sequence], size: int, label: str):
    """Turn a per-dimension list of (lo, hi) pairs (None = unbounded) into two arrays."""
    lo = np.full(size, -np.inf)
    hi = np.full(size, np.inf)
    if bounds is None:
        return lo, hi
    if len(bounds) != size:
        raise DimensionError(f"{label} box has {len(bounds)} entries, expected {size}")
    for i, pair in enumerate(bounds):
        low, high = pair
        lo[i] = -np.inf if low is None else float(low)
        hi[i] = np.inf if high is None else float(high)
        if lo[i] > hi[i]:
            raise DimensionError(f"{label} box entry {i} is empty: [{lo[i]}, {hi[i]}]")
    return lo, hi


@dataclass
class LinearSystem:
    A: np.ndarray
    B: np.ndarray
    x0: np.ndarray
    x_lo: np.ndarray
    x_hi: np.ndarray
    u_lo: np.ndarray
    u_hi: np.ndarray
    dt: float = 1.0

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.B = np.atleast_2d(np.asarray(self.B, dtype=float))
        self.x0 = np.asarray(self.x0, dtype=float).reshape(-1)
        n = self.A.shape[0]
        if self.A.shape != (n, n):
            raise DimensionError(f"A must be square, got shape {self.A.shape}")
        if self.B.shape[0] != n:
            raise DimensionError(f"B must have {n} rows, got shape {self.B.shape}")
        if self.x0.shape != (n,):
            raise DimensionError(f"x0 must have length {n}, got {self.x0.shape[0]}")
        for name, size in (("x_lo", n), ("x_hi", n), ("u_lo", self.m), ("u_hi", self.m)):
            value = np.asarray(getattr(self, name), dtype=float).reshape(-1)
            if value.shape != (size,):
                raise DimensionError(f"{name} must have length {size}")
            setattr(self, name, value)
        if not self.dt > 0:
            raise DimensionError(f"dt must be positive, got {self.dt}")
        if np.any(self.x0 < self.x_lo) or np.any(self.x0 > self.x_hi):
            # Kept constructible: the encoded problem is then reported infeasible by the solver.
            logger.warning(f"Initial state {self.x0.tolist()} lies outside the state box")

    @classmethod
    def build(
        cls,
        A,
        B,
        x0,
        state_bounds: Optional[Sequence] = None,
        input_bounds: Optional[Sequence] = None,
        dt: float = 1.0,
    ) -> "LinearSystem":
        A = np.atleast_2d(np.asarray(A, dtype=float))
        B = np.atleast_2d(np.asarray(B, dtype=float))
        if B.shape[0] != A.shape[0]:
            raise DimensionError(f"B must have {A.shape[0]} rows, got shape {B.shape}")
        x_lo, x_hi = _box(state_bounds, A.shape[0], "State")
        u_lo, u_hi = _box(input_bounds, B.shape[1], "Input")
        return cls(A, B, x0, x_lo, x_hi, u_lo, u_hi, dt)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def input_magnitude(self) -> float:
        """Largest finite |u| admitted by the input box (1 if unbounded)."""
        finite = [abs(v) for v in np.concatenate([self.u_lo, self.u_hi]) if np.isfinite(v)]
        return max(finite) if finite and max(finite) > 0 else 1.0

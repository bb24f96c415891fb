"""Discrete-time, finite-horizon signals."""
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Sequence

import numpy as np

from app.exceptions import DimensionError, HorizonError


@dataclass
class Signal:
    """
    values has shape (n, T + 1): one row per state dimension, one column per step.

    variables maps formula variable names onto rows. When omitted, rows are
    named x1..xn.
    """

    values: np.ndarray
    variables: Dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if self.values.ndim != 2 or self.values.shape[1] == 0:
            raise DimensionError(f"Signal values must be an (n, T+1) matrix, got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise DimensionError("Signal values must be finite")
        if not self.variables:
            self.variables = {f"x{i + 1}": i for i in range(self.dimension)}
        for name, row in self.variables.items():
            if not 0 <= row < self.dimension:
                raise DimensionError(f"Variable '{name}' maps to row {row}, signal has {self.dimension} rows")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[float]], variables: Optional[Mapping[str, int]] = None) -> "Signal":
        return cls(np.asarray(rows, dtype=float), dict(variables or {}))

    @classmethod
    def scalar(cls, samples: Sequence[float], name: str = "x") -> "Signal":
        """One-dimensional signal, handy for hand-built traces."""
        return cls(np.asarray([samples], dtype=float), {name: 0})

    @property
    def dimension(self) -> int:
        return self.values.shape[0]

    @property
    def horizon(self) -> int:
        return self.values.shape[1] - 1

    def row(self, name: str) -> np.ndarray:
        if name not in self.variables:
            raise DimensionError(f"Unknown signal variable '{name}' (known: {sorted(self.variables)})")
        return self.values[self.variables[name]]

    def check_instant(self, t: int) -> None:
        if t < 0 or t > self.horizon:
            raise HorizonError(t, self.horizon)

from __future__ import annotations

import dataclasses

import numpy as np
import numpy.typing as npt

from app.errors import DomainError


@dataclasses.dataclass(frozen=True)
class TimeSeries:
    """Real samples on a time grid in ns (PL rate, P_y, residuals)."""

    t: npt.NDArray[np.float64]
    values: npt.NDArray[np.float64]

    def __post_init__(self) -> None:
        t = np.asarray(self.t, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != values.shape:
            raise DomainError(f"time grid {t.shape} and values {values.shape} must be matching 1-D arrays")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return int(self.t.size)

    @property
    def dt(self) -> float:
        if self.t.size < 2:
            raise DomainError("time series needs at least two samples for a step")
        return float(self.t[1] - self.t[0])

    def is_uniform(self, rtol: float = 1e-6) -> bool:
        if self.t.size < 2:
            return False
        steps = np.diff(self.t)
        return bool(steps[0] > 0 and np.allclose(steps, steps[0], rtol=rtol, atol=0.0))

    def window(self, t0: float, t1: float) -> "TimeSeries":
        mask = (self.t >= t0) & (self.t <= t1)
        return TimeSeries(self.t[mask], self.values[mask])

    def shifted(self, t0: float) -> "TimeSeries":
        return TimeSeries(self.t - t0, self.values)

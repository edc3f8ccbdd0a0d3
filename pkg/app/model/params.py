"""Validated physics parameter blocks.

Frequencies are ordinary frequencies in GHz and times are in ns; the 2*pi
factor is applied only inside the Hamiltonian constructors.
"""
from __future__ import annotations

import math
import warnings
from typing import Optional, Union

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.errors import DomainError


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class StrainDriveConfig(_Frozen):
    V_A1: float = 0.0
    V_E1: float = 3.13
    V_E2: float = 0.72
    A1: float = 0.0
    E1: float = 0.0
    f_m: float = 1.296
    phase_m: float = 0.0
    n: int = 5
    # set by canonicalize: the stored x/y labels are the physical y/x
    relabeled: bool = False

    @field_validator("f_m")
    @classmethod
    def _f_m_positive(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("f_m must be positive")
        return v

    @field_validator("n")
    @classmethod
    def _n_positive(cls, v: int) -> int:
        if v < 1:
            raise ValueError("n must be a positive integer")
        return v

    @property
    def splitting(self) -> float:
        """Undriven doublet splitting 2*sqrt(V_E1^2 + V_E2^2), GHz."""
        return 2.0 * math.hypot(self.V_E1, self.V_E2)

    @property
    def delta0(self) -> float:
        return self.V_E1 - 0.5 * self.n * self.f_m

    @property
    def bessel_argument(self) -> float:
        return 2.0 * self.E1 / self.f_m

    @property
    def period(self) -> float:
        return 1.0 / self.f_m

    def with_drive(self, E1: float, a1_ratio: Optional[float] = None) -> "StrainDriveConfig":
        """Same statics, new physical drive amplitude. a1_ratio r sets A1 = E1 / r.

        On a relabeled config E1 is stored negated, so that
        canonicalize(raw).with_drive(e) == canonicalize(raw.with_drive(e)).
        """
        A1 = self.A1 if a1_ratio is None else E1 / a1_ratio
        return self.model_copy(update={"E1": -E1 if self.relabeled else E1, "A1": A1})

    def physical(self) -> "StrainDriveConfig":
        """Undo canonicalize: statics and drive in the physical |E_x>/|E_y> labels."""
        if not self.relabeled:
            return self
        return self.model_copy(update={"V_E1": -self.V_E1, "E1": -self.E1, "relabeled": False})


class PulseProfile(_Frozen):
    rise_time: float = Field(0.75, ge=0)
    pulse_width: float = Field(1.0, ge=0)
    pulse_separation: float = Field(100.0, gt=0)
    pulse_count: int = Field(2, ge=1)
    closed_field_fraction: float = Field(0.08, ge=0, le=1)
    start_time: float = 5.0

    def onset(self, k: int) -> float:
        return self.start_time + k * self.pulse_separation

    def _envelope_at(self, t: float) -> float:
        floor = self.closed_field_fraction
        if t < self.start_time:
            return floor
        # only the nearest preceding pulse can be open
        k = min(int((t - self.start_time) // self.pulse_separation), self.pulse_count - 1)
        t0 = self.onset(k)
        top0 = t0 + self.rise_time
        top1 = top0 + self.pulse_width
        t1 = top1 + self.rise_time
        if top0 <= t <= top1:
            return 1.0
        if t0 <= t < top0:
            return floor + (1.0 - floor) * (t - t0) / self.rise_time
        if top1 < t <= t1:
            return floor + (1.0 - floor) * (t1 - t) / self.rise_time
        return floor

    def envelope(self, t: Union[float, npt.ArrayLike]):
        """Trapezoidal field factor in [closed_field_fraction, 1].

        Pulse k opens at start_time + k * pulse_separation, rises linearly over
        rise_time, stays fully open for pulse_width and falls over rise_time.
        """
        if np.ndim(t) == 0:
            return self._envelope_at(float(t))
        tt = np.asarray(t, dtype=float)
        return np.array([self._envelope_at(x) for x in tt.ravel()]).reshape(tt.shape)


class LaserConfig(_Frozen):
    detuning_x: float = 0.0
    omega_lx: float = Field(0.05, ge=0)
    omega_ly: float = Field(0.05, ge=0)
    # None means continuous-wave
    pulse: Optional[PulseProfile] = None

    def envelope(self, t: float) -> float:
        return 1.0 if self.pulse is None else self.pulse.envelope(t)


class RelaxationConfig(_Frozen):
    gamma_opt: float = Field(1.0 / 12.0, ge=0)
    gamma_orb: float = Field(1.0 / 10.0, ge=0)


class NoiseConfig(_Frozen):
    sigma: float = Field(0.035, ge=0)
    n_samples: int = Field(500, ge=1)
    seed: int = Field(0, ge=0, le=(1 << 64) - 1)


def strain_from_spectroscopy(delta: float, theta: float) -> tuple[float, float]:
    """(V_E1, V_E2) from splitting delta (GHz) and dipole angle theta (degrees).

    V_E1 = (delta/2) cos 2theta and V_E2 = (delta/2) sin 2theta, so
    tan 2theta = V_E2 / V_E1 and delta = 2 sqrt(V_E1^2 + V_E2^2).
    """
    if not delta > 0:
        raise DomainError(f"splitting must be positive, got {delta}")
    if abs(theta) > 45.0 and not math.isclose(abs(theta), 45.0):
        raise DomainError(f"dipole angle {theta} deg outside [-45, 45]")
    if math.isclose(abs(theta), 45.0):
        warnings.warn(
            f"dipole angle {theta} deg puts V_E1 at zero; |E_x>/|E_y> labels are degenerate",
            RuntimeWarning,
            stacklevel=2,
        )
    two_theta = math.radians(2.0 * theta)
    half = 0.5 * delta
    return half * math.cos(two_theta), half * math.sin(two_theta)


def canonicalize(cfg: StrainDriveConfig) -> StrainDriveConfig:
    """Relabel |E_x>/|E_y> so that V_E1 >= 0. Flips V_E1 and E1 together.

    The flip is recorded in relabeled; physical() undoes it.
    """
    if cfg.V_E1 >= 0:
        return cfg
    return cfg.model_copy(update={"V_E1": -cfg.V_E1, "E1": -cfg.E1, "relabeled": not cfg.relabeled})

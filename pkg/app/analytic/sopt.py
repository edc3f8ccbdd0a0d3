"""Second-order perturbation theory in V_E2 within the rotating frame."""
from __future__ import annotations

import dataclasses
import math

import numpy as np
import numpy.typing as npt

from app.errors import DomainError
from app.floquet.solver import rotating_frame_couplings, truncation_order
from app.model.params import StrainDriveConfig
from app.specfun.special import bessel_j
from app.timeseries import TimeSeries


@dataclasses.dataclass(frozen=True)
class SoptResult:
    delta: float  # GHz
    omega0: float  # GHz
    omega_r: float  # GHz, 2 sqrt(delta^2 + omega0^2)
    couplings_used: dict[int, complex]

    @property
    def amplitude(self) -> float:
        """Peak transfer probability omega0^2 / (omega0^2 + delta^2)."""
        denom = self.omega0**2 + self.delta**2
        return self.omega0**2 / denom if denom > 0 else 0.0


def _couplings_within_truncation(cfg: StrainDriveConfig) -> tuple[float, dict[int, complex]]:
    delta0, couplings = rotating_frame_couplings(cfg)
    J = truncation_order(cfg)
    return delta0, {s: w for s, w in couplings.items() if abs(s) <= J}


def sopt_detuning(cfg: StrainDriveConfig) -> float:
    """delta = V_E1 - n f_m/2 + sum_{s != 0} |W_s|^2 / (s f_m)."""
    delta0, couplings = _couplings_within_truncation(cfg)
    shift = sum(abs(w) ** 2 / (s * cfg.f_m) for s, w in couplings.items() if s != 0)
    return delta0 + shift


def sopt_rabi(cfg: StrainDriveConfig) -> SoptResult:
    delta0, couplings = _couplings_within_truncation(cfg)
    delta = delta0 + sum(abs(w) ** 2 / (s * cfg.f_m) for s, w in couplings.items() if s != 0)
    omega0 = cfg.V_E2 * bessel_j(-cfg.n, cfg.bessel_argument)
    return SoptResult(
        delta=delta,
        omega0=omega0,
        omega_r=2.0 * math.hypot(delta, omega0),
        couplings_used=couplings,
    )


def rabi_trajectory(sopt: SoptResult, t_grid: npt.ArrayLike) -> TimeSeries:
    """P_y(t) = omega0^2/(omega0^2 + delta^2) (1 - cos 2 pi omega_r t) / 2."""
    t = np.asarray(t_grid, dtype=float)
    values = sopt.amplitude * 0.5 * (1.0 - np.cos(2.0 * math.pi * sopt.omega_r * t))
    return TimeSeries(t, values)


def asymptotic_limits(cfg: StrainDriveConfig) -> tuple[float, float]:
    """Large-drive forms of (delta, omega0).

    delta  -> delta0 + V_E2^2 f/E1^2 sin(4E1/f + n^2 f/(2E1) + (n + 1/2) pi/2)
    omega0 -> V_E2/sqrt(pi) sqrt(f/E1) cos(2E1/f + n^2 f/(4E1) + (n - 1/2) pi/2)
    """
    e1 = cfg.E1
    if e1 == 0:
        raise DomainError("large-drive limits need a nonzero E1")
    f, n, v = cfg.f_m, cfg.n, cfg.V_E2
    if e1 < 0:
        # J_{-n}(-z) = (-1)^n J_{-n}(z); the delta sum is even in E1
        sign = -1.0 if n % 2 else 1.0
        e1 = -e1
    else:
        sign = 1.0
    delta_inf = cfg.delta0 + v**2 * f / e1**2 * math.sin(4 * e1 / f + n**2 * f / (2 * e1) + (n + 0.5) * math.pi / 2)
    omega0_inf = v / math.sqrt(math.pi) * math.sqrt(f / e1) * math.cos(
        2 * e1 / f + n**2 * f / (4 * e1) + (n - 0.5) * math.pi / 2
    )
    return delta_inf, sign * omega0_inf

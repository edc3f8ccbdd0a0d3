from __future__ import annotations

import dataclasses
import math

from app.errors import RegimeError
from app.floquet.solver import rabi_from_quasi_energies
from app.model.params import StrainDriveConfig
from app.specfun.special import arg_gamma


@dataclasses.dataclass(frozen=True)
class LzResult:
    chi: float
    eta: float
    theta_dyn: float
    theta_stokes: float
    omega_r: float  # GHz, folded into [0, f_m/2]

    @property
    def transition_probability(self) -> float:
        """sin^2(chi/2)."""
        return math.sin(0.5 * self.chi) ** 2


def stokes_phase(eta: float) -> float:
    """pi/4 + arg Gamma(1 - i eta) + eta (ln eta - 1); pi/4 at eta = 0."""
    if eta == 0:
        return math.pi / 4
    return math.pi / 4 + arg_gamma(complex(1.0, -eta)) + eta * (math.log(eta) - 1.0)


def landau_zener_rabi(cfg: StrainDriveConfig) -> LzResult:
    """Rabi frequency from periodic Landau-Zener sweeps through the drive nodes.

    Omega_R = f_m sin(chi/2) |cos(theta - theta_stokes)| with
    sin^2(chi/2) = 1 - exp(-4 pi eta), eta = V_E2^2 / (2 E1 f_m), and the
    dynamical phase between crossings
    theta = 2 sqrt(E1^2 - V_E1^2)/f_m - (2 V_E1/f_m) acos(V_E1/E1).

    Raises
    ------
    RegimeError
        If |E1| <= |V_E1|: the sweep never reaches the avoided crossing.
    """
    e1 = abs(cfg.E1)
    v1 = cfg.V_E1
    if e1 <= abs(v1):
        raise RegimeError(f"Landau-Zener picture needs |E1| > |V_E1| (E1={cfg.E1}, V_E1={v1})")
    f = cfg.f_m
    eta = cfg.V_E2**2 / (2.0 * e1 * f)
    p_transition = -math.expm1(-4.0 * math.pi * eta)
    chi = 2.0 * math.asin(math.sqrt(p_transition))
    theta = 2.0 * math.sqrt(e1**2 - v1**2) / f - (2.0 * v1 / f) * math.acos(v1 / e1)
    theta_s = stokes_phase(eta)
    raw = f * math.sin(0.5 * chi) * abs(math.cos(theta - theta_s))
    return LzResult(
        chi=chi,
        eta=eta,
        theta_dyn=theta,
        theta_stokes=theta_s,
        omega_r=rabi_from_quasi_energies((raw, 0.0), f),
    )

from app.analytic.landau_zener import LzResult, landau_zener_rabi, stokes_phase
from app.analytic.sopt import SoptResult, asymptotic_limits, rabi_trajectory, sopt_detuning, sopt_rabi

__all__ = [
    "LzResult",
    "SoptResult",
    "asymptotic_limits",
    "landau_zener_rabi",
    "rabi_trajectory",
    "sopt_detuning",
    "sopt_rabi",
    "stokes_phase",
]

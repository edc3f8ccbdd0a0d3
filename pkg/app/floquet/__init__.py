from app.floquet.solver import (
    AbsorptionSpectrum,
    FloquetSolution,
    RotatingFrame,
    absorption_spectrum,
    floquet_rabi,
    fold_zone,
    monodromy_matrix,
    monodromy_quasi_energies,
    propagate_rotating_frame,
    rabi_from_quasi_energies,
    rotating_frame_couplings,
    solve_floquet,
    solve_floquet_matrix,
    truncation_order,
)

__all__ = [
    "AbsorptionSpectrum",
    "FloquetSolution",
    "RotatingFrame",
    "absorption_spectrum",
    "floquet_rabi",
    "fold_zone",
    "monodromy_matrix",
    "monodromy_quasi_energies",
    "propagate_rotating_frame",
    "rabi_from_quasi_energies",
    "rotating_frame_couplings",
    "solve_floquet",
    "solve_floquet_matrix",
    "truncation_order",
]

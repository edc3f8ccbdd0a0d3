from app.model.hamiltonians import (
    EX,
    EY,
    GROUND,
    basis_state,
    build_collapse_ops,
    build_excited_hamiltonian2,
    build_full_hamiltonian3,
    excited_x_energy,
    make_full_hamiltonian,
)
from app.model.params import (
    LaserConfig,
    NoiseConfig,
    PulseProfile,
    RelaxationConfig,
    StrainDriveConfig,
    canonicalize,
    strain_from_spectroscopy,
)

__all__ = [
    "EX",
    "EY",
    "GROUND",
    "LaserConfig",
    "NoiseConfig",
    "PulseProfile",
    "RelaxationConfig",
    "StrainDriveConfig",
    "basis_state",
    "build_collapse_ops",
    "build_excited_hamiltonian2",
    "build_full_hamiltonian3",
    "canonicalize",
    "excited_x_energy",
    "make_full_hamiltonian",
    "strain_from_spectroscopy",
]

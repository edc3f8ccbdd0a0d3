from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np
import numpy.typing as npt

from app.model.params import LaserConfig, RelaxationConfig, StrainDriveConfig

TWO_PI = 2.0 * math.pi

ComplexMatrix = npt.NDArray[np.complex128]
HamiltonianFn = Callable[[float], ComplexMatrix]

# basis order for the three-level model
GROUND, EX, EY = 0, 1, 2

ZERO_PERTURBATION = (0.0, 0.0, 0.0)


def drive_cos(t: float, cfg: StrainDriveConfig) -> float:
    return math.cos(TWO_PI * cfg.f_m * t + cfg.phase_m)


def build_excited_hamiltonian2(t: float, cfg: StrainDriveConfig) -> ComplexMatrix:
    """Driven orbital doublet, 2*pi*[(V_A1 + A1 c) 1 + (V_E1 + E1 c) sz + V_E2 sx] in rad/ns."""
    c = drive_cos(t, cfg)
    iden = cfg.V_A1 + cfg.A1 * c
    z = cfg.V_E1 + cfg.E1 * c
    return TWO_PI * np.array(
        [[iden + z, cfg.V_E2], [cfg.V_E2, iden - z]],
        dtype=complex,
    )


def excited_x_energy(cfg: StrainDriveConfig) -> float:
    """Undriven energy of the eigenstate connected to the physical |E_x>, GHz."""
    cfg = cfg.physical()
    sign = 1.0 if cfg.V_E1 >= 0 else -1.0
    return cfg.V_A1 + sign * math.hypot(cfg.V_E1, cfg.V_E2)


def make_full_hamiltonian(
    cfg: StrainDriveConfig,
    laser: LaserConfig,
    perturbation: Sequence[float] = ZERO_PERTURBATION,
) -> HamiltonianFn:
    """t -> 3x3 Hamiltonian in the basis {|0>, |E_x>, |E_y>}, laser frame.

    The ground state sits at detuning_x + e_x, so detuning_x = 0 is resonant
    with the undriven |E_x> line. The perturbation (E_A1, E_E1, E_E2) shifts
    the excited block only; e_x is taken from the unperturbed statics.
    A relabeled config is mapped back first, so EX and EY and the laser
    couplings always refer to the physical states.
    """
    cfg = cfg.physical()
    e_a1, e_e1, e_e2 = (float(p) for p in perturbation)
    static = np.zeros((3, 3))
    static[GROUND, GROUND] = laser.detuning_x + excited_x_energy(cfg)
    static[EX, EX] = cfg.V_A1 + e_a1 + (cfg.V_E1 + e_e1)
    static[EY, EY] = cfg.V_A1 + e_a1 - (cfg.V_E1 + e_e1)
    static[EX, EY] = static[EY, EX] = cfg.V_E2 + e_e2

    drive = np.diag([0.0, cfg.A1 + cfg.E1, cfg.A1 - cfg.E1])

    coupling = np.zeros((3, 3))
    coupling[GROUND, EX] = coupling[EX, GROUND] = 0.5 * laser.omega_lx
    coupling[GROUND, EY] = coupling[EY, GROUND] = 0.5 * laser.omega_ly

    static_c = TWO_PI * static.astype(complex)
    drive_c = TWO_PI * drive.astype(complex)
    coupling_c = TWO_PI * coupling.astype(complex)

    def hamiltonian(t: float) -> ComplexMatrix:
        return static_c + drive_c * drive_cos(t, cfg) + coupling_c * laser.envelope(t)

    return hamiltonian


def build_full_hamiltonian3(
    t: float,
    cfg: StrainDriveConfig,
    laser: LaserConfig,
    perturbation: Sequence[float] = ZERO_PERTURBATION,
) -> ComplexMatrix:
    return make_full_hamiltonian(cfg, laser, perturbation)(t)


def build_collapse_ops(relax: RelaxationConfig) -> list[ComplexMatrix]:
    """Optical decay sqrt(G)|0><E_i| and orbital dephasing sqrt(g)|E_i><E_i|.

    Operators with a zero rate are left out.
    """
    ops: list[ComplexMatrix] = []
    if relax.gamma_opt > 0:
        amp = math.sqrt(relax.gamma_opt)
        for excited in (EX, EY):
            op = np.zeros((3, 3), dtype=complex)
            op[GROUND, excited] = amp
            ops.append(op)
    if relax.gamma_orb > 0:
        amp = math.sqrt(relax.gamma_orb)
        for excited in (EX, EY):
            op = np.zeros((3, 3), dtype=complex)
            op[excited, excited] = amp
            ops.append(op)
    return ops


def basis_state(index: int, dim: int = 3) -> ComplexMatrix:
    """Pure-state density matrix |index><index|."""
    rho = np.zeros((dim, dim), dtype=complex)
    rho[index, index] = 1.0
    return rho

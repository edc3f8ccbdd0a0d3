"""Simulated photoluminescence-excitation sweeps."""
from __future__ import annotations

import dataclasses
import logging
import math
from typing import Optional

import numpy as np
import numpy.typing as npt

from app.errors import DomainError, NumericalError
from app.experiment.pool import parallel_map
from app.fitdsp.models import DoubletFit, fit_ple_doublet
from app.lindblad.master_equation import average_populations, evolve_master_equation, pl_signal
from app.model.hamiltonians import GROUND, basis_state, build_collapse_ops, make_full_hamiltonian
from app.model.params import LaserConfig, NoiseConfig, RelaxationConfig, StrainDriveConfig
from app.specfun.rng import SeededRng, gaussian_sample

logger = logging.getLogger(__name__)


def _as_grid(values, name: str) -> npt.NDArray[np.float64]:
    grid = np.atleast_1d(np.asarray(values, dtype=float))
    if grid.size == 0:
        raise DomainError(f"{name} grid is empty")
    if grid.size > 1:
        steps = np.diff(grid)
        if not (np.all(steps > 0) or np.all(steps < 0)):
            raise DomainError(f"{name} grid must be strictly monotone")
    return grid


@dataclasses.dataclass(frozen=True)
class SweepSpec:
    laser_detunings: npt.NDArray[np.float64]
    drive_amplitudes: npt.NDArray[np.float64]  # E1 values; A1 = E1 / a1_ratio
    evolve_window: tuple[float, float] = (0.0, 50.0)
    alpha: float = 1.0
    beta: float = 0.7
    diffusion: Optional[NoiseConfig] = None
    a1_ratio: float = -0.7
    tolerance: float = 1e-8
    time_step: float = 0.05

    def __post_init__(self) -> None:
        object.__setattr__(self, "laser_detunings", _as_grid(self.laser_detunings, "detuning"))
        object.__setattr__(self, "drive_amplitudes", _as_grid(self.drive_amplitudes, "drive"))
        t0, t1 = self.evolve_window
        if not 0 <= t0 < t1:
            raise DomainError(f"evolve window {self.evolve_window} must satisfy 0 <= t0 < t1")
        if self.time_step <= 0:
            raise DomainError("time_step must be positive")


@dataclasses.dataclass(frozen=True)
class PleMap:
    detunings: npt.NDArray[np.float64]
    drives: npt.NDArray[np.float64]
    pl: npt.NDArray[np.float64]  # shape (len(drives), len(detunings)); NaN marks failed points

    @property
    def failed(self) -> npt.NDArray[np.bool_]:
        return np.isnan(self.pl)

    def slice(self, drive_index: int) -> npt.NDArray[np.float64]:
        return self.pl[drive_index]


def _perturbations(noise: Optional[NoiseConfig]) -> list[tuple[float, float, float]]:
    if noise is None or noise.sigma == 0:
        return [(0.0, 0.0, 0.0)]
    draws = []
    for k in range(noise.n_samples):
        rng = SeededRng(noise.seed, k)
        draws.append(tuple(gaussian_sample(rng, 0.0, noise.sigma) for _ in range(3)))
    return draws


def _time_grid(spec: SweepSpec) -> npt.NDArray[np.float64]:
    t1 = spec.evolve_window[1]
    steps = max(2, int(math.ceil(t1 / spec.time_step)))
    grid = np.linspace(0.0, t1, steps + 1)
    return np.union1d(grid, [spec.evolve_window[0]])


def ple_point(
    spec: SweepSpec,
    cfg: StrainDriveConfig,
    laser: LaserConfig,
    relax: RelaxationConfig,
    perturbations: Optional[list[tuple[float, float, float]]] = None,
) -> float:
    """PL for one (drive, detuning) point: evolve from |0>, window-average, average draws."""
    ops = build_collapse_ops(relax)
    grid = _time_grid(spec)
    rho0 = basis_state(GROUND)
    values = []
    for pert in perturbations or [(0.0, 0.0, 0.0)]:
        result = evolve_master_equation(make_full_hamiltonian(cfg, laser, pert), ops, rho0, grid, tol=spec.tolerance)
        rho11, rho22 = average_populations(result, spec.evolve_window)
        values.append(pl_signal(rho11, rho22, spec.alpha, spec.beta))
    return float(np.mean(values))


def ple_sweep(
    spec: SweepSpec,
    cfg: StrainDriveConfig,
    laser: LaserConfig,
    relax: RelaxationConfig,
    threads: Optional[int] = None,
) -> PleMap:
    """PL over the (drive amplitude x laser detuning) grid.

    A point whose integration fails is logged and left as NaN; the sweep goes on.
    """
    perturbations = _perturbations(spec.diffusion)
    jobs = [(i, j) for i in range(spec.drive_amplitudes.size) for j in range(spec.laser_detunings.size)]

    def run(job: tuple[int, int]) -> float:
        i, j = job
        e1 = float(spec.drive_amplitudes[i])
        detuning = float(spec.laser_detunings[j])
        point_cfg = cfg.with_drive(e1, spec.a1_ratio)
        point_laser = laser.model_copy(update={"detuning_x": detuning})
        try:
            return ple_point(spec, point_cfg, point_laser, relax, perturbations)
        except NumericalError as e:
            logger.warning("[ple_sweep] point E1=%.4g detuning=%.4g failed: %s", e1, detuning, e)
            return math.nan

    values = parallel_map(run, jobs, threads)
    pl = np.array(values, dtype=float).reshape(spec.drive_amplitudes.size, spec.laser_detunings.size)
    logger.info("[ple_sweep] %d points, %d failed", pl.size, int(np.isnan(pl).sum()))
    return PleMap(spec.laser_detunings, spec.drive_amplitudes, pl)


def ple_slice_doublet(
    spec: SweepSpec,
    cfg: StrainDriveConfig,
    laser: LaserConfig,
    relax: RelaxationConfig,
    threads: Optional[int] = None,
) -> list[DoubletFit]:
    """Autler-Townes doublet fit for every drive amplitude of the sweep."""
    pmap = ple_sweep(spec, cfg, laser, relax, threads)
    fits = []
    for i in range(pmap.drives.size):
        row = pmap.slice(i)
        ok = ~np.isnan(row)
        fits.append(fit_ple_doublet(pmap.detunings[ok], row[ok]))
    return fits

"""Lindblad master-equation integration for the 2- and 3-level models."""
from __future__ import annotations

import dataclasses
import logging
from typing import Sequence

import numpy as np
import numpy.typing as npt
from scipy.integrate import RK45, trapezoid

from app.errors import DomainError, IntegrationError
from app.model.hamiltonians import ComplexMatrix, HamiltonianFn

logger = logging.getLogger(__name__)

DEFAULT_RTOL = 1e-8
DEFAULT_ATOL = 1e-10

# RK45 spends six right-hand-side calls per attempted step, plus two at start-up
_RK45_EVALS_PER_STEP = 6
_RK45_STARTUP_EVALS = 2


@dataclasses.dataclass(frozen=True)
class StepStats:
    accepted: int
    rejected: int
    min_step: float


@dataclasses.dataclass(frozen=True)
class EvolutionDiagnostics:
    trace_defect: float
    hermiticity_defect: float
    min_eigenvalue: float


@dataclasses.dataclass(frozen=True)
class EvolutionResult:
    time_grid: npt.NDArray[np.float64]
    states: npt.NDArray[np.complex128]  # (len(time_grid), dim, dim)
    step_stats: StepStats

    @property
    def dim(self) -> int:
        return int(self.states.shape[1])

    def populations(self, index: int) -> npt.NDArray[np.float64]:
        return self.states[:, index, index].real.copy()

    def diagnostics(self) -> EvolutionDiagnostics:
        traces = np.trace(self.states, axis1=1, axis2=2)
        herm = np.abs(self.states - np.conj(np.swapaxes(self.states, 1, 2))).max()
        sym = 0.5 * (self.states + np.conj(np.swapaxes(self.states, 1, 2)))
        eigs = np.linalg.eigvalsh(sym)
        return EvolutionDiagnostics(
            trace_defect=float(np.abs(traces - 1.0).max()),
            hermiticity_defect=float(herm),
            min_eigenvalue=float(eigs.min()),
        )


def _check_density_matrix(rho: ComplexMatrix) -> ComplexMatrix:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.shape[0] not in (2, 3):
        raise DomainError(f"density matrix must be 2x2 or 3x3, got shape {rho.shape}")
    if abs(np.trace(rho) - 1.0) > 1e-8:
        raise DomainError("density matrix trace must be 1")
    if np.abs(rho - rho.conj().T).max() > 1e-10:
        raise DomainError("density matrix must be Hermitian")
    if np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() < -1e-8:
        raise DomainError("density matrix must be positive semidefinite")
    return rho


def lindblad_rhs(hamiltonian: HamiltonianFn, collapse_ops: Sequence[ComplexMatrix], dim: int):
    """Vectorised right-hand side y' = vec(-i[H, rho] + D[rho])."""
    ops = [np.asarray(c, dtype=complex) for c in collapse_ops]
    ops_dag = [c.conj().T for c in ops]
    loss = sum((cd @ c for c, cd in zip(ops, ops_dag)), np.zeros((dim, dim), dtype=complex))

    def rhs(t: float, y: npt.NDArray[np.complex128]) -> npt.NDArray[np.complex128]:
        rho = y.reshape(dim, dim)
        h = hamiltonian(t)
        drho = -1j * (h @ rho - rho @ h)
        for c, cd in zip(ops, ops_dag):
            drho += c @ rho @ cd
        drho -= 0.5 * (loss @ rho + rho @ loss)
        return drho.ravel()

    return rhs


def evolve_master_equation(
    hamiltonian: HamiltonianFn,
    collapse_ops: Sequence[ComplexMatrix],
    rho0: ComplexMatrix,
    t_grid: npt.ArrayLike,
    tol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    max_step: float = np.inf,
) -> EvolutionResult:
    """Integrate d rho/dt = -i[H, rho] + sum_n (C rho C^+ - {C^+C, rho}/2).

    rho0 is the state at t_grid[0]. Snapshots at the grid points come from the
    stepper's dense output, so the grid does not constrain step control.

    Raises
    ------
    DomainError
        On an invalid rho0 or a grid that is not strictly increasing.
    IntegrationError
        When the adaptive stepper fails (step-size underflow).
    """
    rho0 = _check_density_matrix(rho0)
    grid = np.asarray(t_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise DomainError("time grid must be a non-empty 1-D sequence")
    if grid.size > 1 and np.any(np.diff(grid) <= 0):
        raise DomainError("time grid must be strictly increasing")
    dim = rho0.shape[0]
    states = np.empty((grid.size, dim, dim), dtype=complex)
    states[0] = rho0
    if grid.size == 1:
        return EvolutionResult(grid, states, StepStats(0, 0, 0.0))

    rhs = lindblad_rhs(hamiltonian, collapse_ops, dim)
    solver = RK45(rhs, grid[0], rho0.ravel(), grid[-1], max_step=max_step, rtol=tol, atol=atol)
    accepted = 0
    min_step = np.inf
    idx = 1
    while solver.status == "running":
        message = solver.step()
        if solver.status == "failed":
            raise IntegrationError(f"master equation stepper failed: {message}", t=solver.t)
        accepted += 1
        min_step = min(min_step, solver.t - solver.t_old)
        if idx < grid.size and grid[idx] <= solver.t:
            dense = solver.dense_output()
            while idx < grid.size and grid[idx] <= solver.t:
                states[idx] = dense(grid[idx]).reshape(dim, dim)
                idx += 1
    rejected = max(0, (solver.nfev - _RK45_STARTUP_EVALS) // _RK45_EVALS_PER_STEP - accepted)
    stats = StepStats(accepted, rejected, float(min_step))
    logger.debug("[lindblad] %d accepted, %d rejected, min step %.3g ns", accepted, rejected, min_step)
    return EvolutionResult(grid, states, stats)


def _excited_indices(dim: int) -> tuple[int, int]:
    return (1, 2) if dim == 3 else (0, 1)


def average_populations(result: EvolutionResult, window: tuple[float, float]) -> tuple[float, float]:
    """Trapezoidal time averages of the two excited-state populations over window."""
    t0, t1 = window
    grid = result.time_grid
    span = 1e-9 * max(1.0, abs(grid[-1]))
    if t0 < grid[0] - span or t1 > grid[-1] + span:
        raise DomainError(f"window ({t0}, {t1}) outside evolved range ({grid[0]}, {grid[-1]})")
    mask = (grid >= t0 - span) & (grid <= t1 + span)
    if mask.sum() < 2 or t1 <= t0:
        raise DomainError(f"window ({t0}, {t1}) holds fewer than two time points")
    t = grid[mask]
    i, j = _excited_indices(result.dim)
    width = t[-1] - t[0]
    rho11 = trapezoid(result.states[mask, i, i].real, t) / width
    rho22 = trapezoid(result.states[mask, j, j].real, t) / width
    return float(rho11), float(rho22)


def pl_signal(rho11_mean: float, rho22_mean: float, alpha: float, beta: float) -> float:
    """PL = alpha * (rho11 + beta * rho22)."""
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    if not 0.0 <= beta <= 1.0:
        raise DomainError(f"beta must lie in [0, 1], got {beta}")
    return alpha * (rho11_mean + beta * rho22_mean)

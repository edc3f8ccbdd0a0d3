"""Floquet analysis of the driven orbital doublet.

All quasi-energies live in the rotating frame that removes the identity
(V_A1, A1) channel and the n*f_m/2 resonance offset:

    i d/dt (u, v) = 2*pi [[delta0, W(t)], [W*(t), -delta0]] (u, v),
    W(t) = V_E2 exp(2i Theta(t)) = sum_s W_s exp(2*pi*i s f_m t).

Floquet states are written u(t) = exp(-2*pi*i nu t) sum_j u_j exp(-2*pi*i j f_m t),
which makes the truncated Fourier-block matrix

    nu u_j = (delta0 - j f_m) u_j + sum_k W_{k-j} v_k
    nu v_j = (-delta0 - j f_m) v_j + sum_k conj(W_{j-k}) u_k.
"""
from __future__ import annotations

import dataclasses
import logging
import math
from typing import Literal, Mapping, Optional

import numpy as np
import numpy.typing as npt
from scipy.integrate import solve_ivp
from scipy.linalg import eigh

from app.errors import IntegrationError, NumericalError, TruncationError
from app.model.params import StrainDriveConfig
from app.specfun.special import MAX_ORDER, bessel_j_orders

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi

COUPLING_FLOOR = 1e-14
BOUNDARY_LIMIT = 1e-6
_TRUNCATION_MARGIN = 20
_SAME_CLASS_TOL = 1e-9


def fold_zone(nu: float, f_m: float) -> float:
    """Fold a quasi-energy into (-f_m/2, f_m/2]."""
    return nu - f_m * math.ceil((nu - 0.5 * f_m) / f_m)


def truncation_order(cfg: StrainDriveConfig) -> int:
    """J = n + ceil(2|E1|/f_m) + 20."""
    return cfg.n + math.ceil(abs(cfg.bessel_argument)) + _TRUNCATION_MARGIN


def _signed_bessel(orders: npt.NDArray[np.int_], x: float) -> npt.NDArray[np.float64]:
    """J_k(x) for an integer array of orders; orders past MAX_ORDER count as zero."""
    orders = np.asarray(orders, dtype=int)
    mag = np.abs(orders)
    top = int(min(mag.max(initial=0), MAX_ORDER))
    table = bessel_j_orders(top, x)
    inside = mag <= top
    vals = np.zeros(orders.shape)
    vals[inside] = table[mag[inside]]
    odd_negative = (orders < 0) & (mag % 2 == 1)
    vals[odd_negative] = -vals[odd_negative]
    return vals


@dataclasses.dataclass(frozen=True)
class RotatingFrame:
    V_A1: float
    A1: float
    E1: float
    V_E2: float
    delta0: float
    n: int
    f_m: float
    phase_m: float = 0.0

    @classmethod
    def from_config(cls, cfg: StrainDriveConfig) -> "RotatingFrame":
        return cls(cfg.V_A1, cfg.A1, cfg.E1, cfg.V_E2, cfg.delta0, cfg.n, cfg.f_m, cfg.phase_m)

    def _sin_term(self, t):
        return np.sin(TWO_PI * self.f_m * t + self.phase_m) - math.sin(self.phase_m)

    def phi(self, t):
        """Identity-channel phase, zero at t = 0."""
        return TWO_PI * self.V_A1 * t + (self.A1 / self.f_m) * self._sin_term(t)

    def theta(self, t):
        """sigma_z-channel phase, zero at t = 0."""
        return math.pi * self.n * self.f_m * t + (self.E1 / self.f_m) * self._sin_term(t)

    @property
    def energy_offset(self) -> float:
        """Lab energy of rotating-frame zero, GHz."""
        return self.V_A1 + 0.5 * self.n * self.f_m

    def coupling(self, t: float) -> complex:
        return self.V_E2 * complex(np.exp(2j * self.theta(t)))

    def hamiltonian(self, t: float) -> npt.NDArray[np.complex128]:
        w = self.coupling(t)
        return TWO_PI * np.array([[self.delta0, w], [w.conjugate(), -self.delta0]], dtype=complex)

    def to_lab(self, t, u, v) -> tuple:
        """Lab amplitudes (x, y) of the rotating-frame state (u, v) at time t."""
        phi, theta = self.phi(t), self.theta(t)
        return np.exp(-1j * (phi + theta)) * u, np.exp(-1j * (phi - theta)) * v


def rotating_frame_couplings(cfg: StrainDriveConfig) -> tuple[float, dict[int, complex]]:
    """(delta0, {s: W_s}) with W_s = V_E2 J_{s-n}(2 E1/f_m), GHz.

    Harmonics whose Bessel factor falls below 1e-14 are dropped. A nonzero
    drive phase multiplies W_s by exp(i(s-n) phase_m - i z sin phase_m).
    """
    z = cfg.bessel_argument
    reach = min(MAX_ORDER, int(abs(z)) + 60)
    ks = np.arange(-reach, reach + 1)
    bessel = _signed_bessel(ks, z)
    couplings: dict[int, complex] = {}
    for k, jk in zip(ks, bessel):
        if abs(jk) < COUPLING_FLOOR or cfg.V_E2 == 0:
            continue
        phase = complex(np.exp(1j * (k * cfg.phase_m - z * math.sin(cfg.phase_m))))
        couplings[int(k) + cfg.n] = cfg.V_E2 * jk * phase
    return cfg.delta0, couplings


@dataclasses.dataclass(frozen=True)
class FloquetSolution:
    """Two physical Floquet branches from the truncated Fourier-block problem.

    ``raw_energies`` pair with the stored coefficients ``u[b, J + j]`` and
    ``v[b, J + j]``; ``quasi_energies`` are the same values folded into the
    first zone.
    """

    quasi_energies: tuple[float, float]
    raw_energies: tuple[float, float]
    u: npt.NDArray[np.complex128]
    v: npt.NDArray[np.complex128]
    truncation: int
    f_m: float
    boundary_weight: float

    @property
    def orders(self) -> npt.NDArray[np.int_]:
        return np.arange(-self.truncation, self.truncation + 1)

    def fourier_coeffs(self, branch: int) -> dict[int, tuple[complex, complex]]:
        return {int(j): (complex(self.u[branch, i]), complex(self.v[branch, i])) for i, j in enumerate(self.orders)}

    def norms(self) -> npt.NDArray[np.float64]:
        return (np.abs(self.u) ** 2 + np.abs(self.v) ** 2).sum(axis=1)


def solve_floquet_matrix(
    delta0: float,
    couplings: Mapping[int, complex],
    truncation: int,
    f_m: float,
) -> FloquetSolution:
    """Diagonalise the (2(2J+1))-dimensional Fourier-block matrix.

    The two branches returned are the eigenvectors with the largest central
    weight |u_0|^2 + |v_0|^2 that belong to distinct Floquet classes.

    Raises
    ------
    TruncationError
        If either selected eigenvector keeps more than 1e-6 of its weight in
        the outermost Fourier orders.
    """
    J = int(truncation)
    size = 2 * J + 1
    orders = np.arange(-J, J + 1)
    mat = np.zeros((2 * size, 2 * size), dtype=complex)
    mat[np.arange(size), np.arange(size)] = delta0 - orders * f_m
    mat[size + np.arange(size), size + np.arange(size)] = -delta0 - orders * f_m
    for s, w in couplings.items():
        # u_j couples to v_{j+s}
        for j in range(max(-J, -J - s), min(J, J - s) + 1):
            row, col = j + J, size + j + s + J
            mat[row, col] = w
            mat[col, row] = np.conj(w)

    energies, vectors = eigh(mat)
    u_all = vectors[:size, :]
    v_all = vectors[size:, :]
    central = np.abs(u_all[J]) ** 2 + np.abs(v_all[J]) ** 2
    ranked = np.argsort(-central, kind="stable")

    first = int(ranked[0])
    first_folded = fold_zone(energies[first], f_m)
    second: Optional[int] = None
    for cand in ranked[1:]:
        gap = abs(fold_zone(energies[cand] - first_folded, f_m))
        if gap > _SAME_CLASS_TOL:
            second = int(cand)
            break
    if second is None:
        second = int(ranked[1])

    picks = [first, second]
    edge = np.r_[0:2, size - 2:size]
    boundary = float(max((np.abs(u_all[edge, b]) ** 2 + np.abs(v_all[edge, b]) ** 2).sum() for b in picks))
    if boundary > BOUNDARY_LIMIT:
        raise TruncationError(f"Floquet truncation J={J} too small", boundary)

    raw = (float(energies[first]), float(energies[second]))
    folded = (fold_zone(raw[0], f_m), fold_zone(raw[1], f_m))
    return FloquetSolution(
        quasi_energies=folded,
        raw_energies=raw,
        u=np.stack([u_all[:, first], u_all[:, second]]),
        v=np.stack([v_all[:, first], v_all[:, second]]),
        truncation=J,
        f_m=f_m,
        boundary_weight=boundary,
    )


def solve_floquet(cfg: StrainDriveConfig, truncation: Optional[int] = None) -> FloquetSolution:
    delta0, couplings = rotating_frame_couplings(cfg)
    J = truncation_order(cfg) if truncation is None else truncation
    return solve_floquet_matrix(delta0, couplings, J, cfg.f_m)


def propagate_rotating_frame(
    cfg: StrainDriveConfig,
    t_grid: npt.ArrayLike,
    psi0: npt.ArrayLike,
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> npt.NDArray[np.complex128]:
    """Rotating-frame amplitudes (u, v) on t_grid, shape (len(t_grid), 2)."""
    frame = RotatingFrame.from_config(cfg)
    grid = np.asarray(t_grid, dtype=float)
    y0 = np.asarray(psi0, dtype=complex)

    def rhs(t, y):
        return -1j * (frame.hamiltonian(t) @ y)

    sol = solve_ivp(rhs, (grid[0], grid[-1]), y0, method="DOP853", t_eval=grid, rtol=rtol, atol=atol)
    if sol.status < 0:
        raise IntegrationError(f"rotating-frame propagation failed: {sol.message}", t=float(sol.t[-1]))
    return sol.y.T


def monodromy_matrix(cfg: StrainDriveConfig, rtol: float = 1e-11, atol: float = 1e-13) -> npt.NDArray[np.complex128]:
    """One-period propagator U(T), T = 1/f_m, of the rotating-frame problem."""
    frame = RotatingFrame.from_config(cfg)

    def rhs(t, y):
        return (-1j * (frame.hamiltonian(t) @ y.reshape(2, 2))).ravel()

    period = cfg.period
    sol = solve_ivp(rhs, (0.0, period), np.eye(2, dtype=complex).ravel(), method="DOP853", rtol=rtol, atol=atol)
    if sol.status < 0:
        raise IntegrationError(f"monodromy integration failed: {sol.message}", t=float(sol.t[-1]))
    unitary = sol.y[:, -1].reshape(2, 2)
    defect = float(np.abs(unitary.conj().T @ unitary - np.eye(2)).max())
    if defect > 1e-9:
        raise NumericalError(f"monodromy matrix not unitary (defect {defect:.2e})")
    return unitary


def monodromy_quasi_energies(cfg: StrainDriveConfig) -> tuple[float, float]:
    """Folded quasi-energies nu = -arg(lambda) f_m / (2 pi), larger first."""
    eigvals = np.linalg.eigvals(monodromy_matrix(cfg))
    nus = sorted((fold_zone(-np.angle(lam) * cfg.f_m / TWO_PI, cfg.f_m) for lam in eigvals), reverse=True)
    return float(nus[0]), float(nus[1])


def rabi_from_quasi_energies(nu: tuple[float, float], f_m: float) -> float:
    """|nu1 - nu2| folded into [0, f_m/2]."""
    gap = abs(nu[0] - nu[1]) % f_m
    return min(gap, f_m - gap)


def floquet_rabi(cfg: StrainDriveConfig, method: Literal["matrix", "monodromy"] = "matrix") -> float:
    if method == "matrix":
        nu = solve_floquet(cfg).quasi_energies
    elif method == "monodromy":
        nu = monodromy_quasi_energies(cfg)
    else:
        raise ValueError(f"unknown Floquet method {method!r}")
    return rabi_from_quasi_energies(nu, cfg.f_m)


@dataclasses.dataclass(frozen=True)
class AbsorptionSpectrum:
    frequencies: npt.NDArray[np.float64]  # GHz, lab frame
    weights: npt.NDArray[np.float64]
    branches: npt.NDArray[np.int_]

    def __len__(self) -> int:
        return int(self.frequencies.size)

    def total_weight(self) -> float:
        return float(self.weights.sum())


def absorption_spectrum(
    sol: FloquetSolution,
    omega_lx: float,
    omega_ly: float,
    cfg: StrainDriveConfig,
    min_weight: float = 1e-12,
) -> AbsorptionSpectrum:
    """Delta-comb absorption lines of the driven doublet, excited from |0>.

    Branch b contributes lines at eps_b + m f_m with eps_b = nu_b + V_A1 + n f_m/2
    and weight |omega_lx phi^x_m + omega_ly phi^y_m|^2, where the sideband
    amplitudes come from mapping (u_j, v_j) back to the lab frame:

        phi^x_m = sum_j u_j J_{m-j}((A1 + E1)/f_m)
        phi^y_m = sum_j v_j J_{m+n-j}((A1 - E1)/f_m)

    Weights over all lines sum to omega_lx^2 + omega_ly^2. Lines below
    min_weight times that total are dropped. On a relabeled config the
    stored x/y states are the physical y/x, so the two laser amplitudes swap.
    """
    if cfg.relabeled:
        omega_lx, omega_ly = omega_ly, omega_lx
    f_m = cfg.f_m
    a_x = (cfg.A1 + cfg.E1) / f_m
    a_y = (cfg.A1 - cfg.E1) / f_m
    phase = cfg.phase_m
    J = sol.truncation
    js = sol.orders
    reach = J + cfg.n + int(max(abs(a_x), abs(a_y))) + 30
    ms = np.arange(-reach, reach + 1)

    kx = ms[:, None] - js[None, :]
    ky = ms[:, None] + cfg.n - js[None, :]
    bx = _signed_bessel(kx, a_x) * np.exp(-1j * kx * phase) * np.exp(1j * a_x * math.sin(phase))
    by = _signed_bessel(ky, a_y) * np.exp(-1j * ky * phase) * np.exp(1j * a_y * math.sin(phase))

    total = omega_lx**2 + omega_ly**2
    offset = 0.5 * cfg.n * f_m + cfg.V_A1
    freqs, weights, branches = [], [], []
    for b in range(2):
        amp = omega_lx * (bx @ sol.u[b]) + omega_ly * (by @ sol.v[b])
        w = np.abs(amp) ** 2
        keep = w >= min_weight * total if total > 0 else np.zeros_like(w, dtype=bool)
        freqs.append(sol.raw_energies[b] + offset + ms[keep] * f_m)
        weights.append(w[keep])
        branches.append(np.full(int(keep.sum()), b))
    freqs_a = np.concatenate(freqs)
    order = np.argsort(freqs_a, kind="stable")
    return AbsorptionSpectrum(freqs_a[order], np.concatenate(weights)[order], np.concatenate(branches)[order])

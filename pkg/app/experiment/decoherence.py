"""Monte Carlo orbital Rabi decoherence from static field fluctuations."""
from __future__ import annotations

import dataclasses
import logging
import math
from typing import Optional

import numpy as np
import numpy.typing as npt

from app.analytic.sopt import rabi_trajectory, sopt_rabi
from app.errors import DomainError, FitError, FitNotAttempted
from app.experiment.pool import parallel_map
from app.fitdsp.least_squares import FitResult
from app.fitdsp.models import fit_decaying_sinusoid
from app.model.params import NoiseConfig, StrainDriveConfig, canonicalize, strain_from_spectroscopy
from app.specfun.rng import SeededRng, gaussian_sample
from app.timeseries import TimeSeries

logger = logging.getLogger(__name__)

WINDOW_LIMIT_FACTOR = 5.0
# fewer oscillations than this in the window leave Omega_R and T2 degenerate
MIN_PERIODS = 2.0


def default_time_grid(t_stop: float = 20.0, t_step: float = 0.05) -> npt.NDArray[np.float64]:
    return np.arange(int(round(t_stop / t_step)) + 1) * t_step


@dataclasses.dataclass(frozen=True)
class DecoherenceSpec:
    noise: NoiseConfig = dataclasses.field(default_factory=NoiseConfig)
    t_grid: npt.NDArray[np.float64] = dataclasses.field(default_factory=default_time_grid)
    drive_grid: npt.NDArray[np.float64] = dataclasses.field(default_factory=lambda: np.array([4.16]))
    delta_scale: float = 1.0
    a1_ratio: float = -0.7
    perturb_a1: bool = False

    def __post_init__(self) -> None:
        if self.noise.n_samples < 2:
            raise DomainError("decoherence Monte Carlo needs at least two samples")
        t = np.asarray(self.t_grid, dtype=float)
        if t.ndim != 1 or t.size < 5:
            raise DomainError("trajectory grid needs at least five points")
        object.__setattr__(self, "t_grid", t)
        object.__setattr__(self, "drive_grid", np.atleast_1d(np.asarray(self.drive_grid, dtype=float)))
        if self.delta_scale <= 0:
            raise DomainError("delta_scale must be positive")

    @property
    def window(self) -> float:
        return float(self.t_grid[-1] - self.t_grid[0])


@dataclasses.dataclass(frozen=True)
class DecoherencePoint:
    E1: float
    mean_trajectory: TimeSeries
    omega_r: float  # GHz, NaN when flagged
    t2_rabi: float  # ns, capped when window-limited
    window_limited: bool
    flagged: bool
    fit: Optional[FitResult] = None


def scaled_statics(cfg: StrainDriveConfig, delta_scale: float) -> StrainDriveConfig:
    """Rescale the splitting by delta_scale, keeping the dipole angle."""
    cfg = canonicalize(cfg)
    if delta_scale == 1.0 or cfg.splitting == 0:
        return cfg
    theta = 0.5 * math.degrees(math.atan2(cfg.V_E2, cfg.V_E1))
    v_e1, v_e2 = strain_from_spectroscopy(cfg.splitting * delta_scale, theta)
    return cfg.model_copy(update={"V_E1": v_e1, "V_E2": v_e2})


def _field_draws(noise: NoiseConfig, perturb_a1: bool) -> list[tuple[float, float, float]]:
    """(E_x, E_y, E_A1) per sample; stream k always feeds sample k."""
    draws = []
    for k in range(noise.n_samples):
        rng = SeededRng(noise.seed, k)
        ex = gaussian_sample(rng, 0.0, noise.sigma)
        ey = gaussian_sample(rng, 0.0, noise.sigma)
        ea = gaussian_sample(rng, 0.0, noise.sigma) if perturb_a1 else 0.0
        draws.append((ex, ey, ea))
    return draws


def mean_rabi_trajectory(
    cfg: StrainDriveConfig,
    draws: list[tuple[float, float, float]],
    t_grid: npt.NDArray[np.float64],
) -> TimeSeries:
    total = np.zeros_like(t_grid)
    for ex, ey, ea in draws:
        sample = canonicalize(
            cfg.model_copy(update={"V_E1": cfg.V_E1 + ex, "V_E2": cfg.V_E2 + ey, "V_A1": cfg.V_A1 + ea})
        )
        total += rabi_trajectory(sopt_rabi(sample), t_grid).values
    return TimeSeries(t_grid, total / len(draws))


def _fit_point(e1: float, trajectory: TimeSeries, window: float) -> DecoherencePoint:
    try:
        fit = fit_decaying_sinusoid(trajectory)
    except FitNotAttempted as e:
        logger.info("[decoherence] E1=%.4g: fit not attempted (%s)", e1, e)
        return DecoherencePoint(e1, trajectory, math.nan, math.nan, False, True)
    except FitError as e:
        logger.warning("[decoherence] E1=%.4g: fit failed (%s)", e1, e)
        return DecoherencePoint(e1, trajectory, math.nan, math.nan, False, True, e.result)
    if not fit.converged:
        logger.warning("[decoherence] E1=%.4g: fit did not converge", e1)
        return DecoherencePoint(e1, trajectory, math.nan, math.nan, False, True, fit)
    omega_r, t2 = fit[1], fit[2]
    if omega_r * window < MIN_PERIODS:
        logger.warning("[decoherence] E1=%.4g: %.2f periods in the window, too few to fit", e1, omega_r * window)
        return DecoherencePoint(e1, trajectory, math.nan, math.nan, False, True, fit)
    cap = WINDOW_LIMIT_FACTOR * window
    limited = t2 > cap
    return DecoherencePoint(e1, trajectory, omega_r, min(t2, cap), limited, False, fit)


def decoherence_monte_carlo(
    spec: DecoherenceSpec,
    cfg: StrainDriveConfig,
    threads: Optional[int] = None,
) -> list[DecoherencePoint]:
    """Ensemble-averaged SOPT Rabi trajectories under Gaussian static fields.

    Every sample shifts V_E1 by E_x and V_E2 by E_y (and V_A1 by E_A1 when
    perturb_a1 is set). The mean P_y(t) of each drive point is fit with a
    decaying cosine; T2 beyond five windows is reported as window-limited
    at the cap. Fits with fewer than MIN_PERIODS oscillations in the window
    are flagged.
    """
    base = scaled_statics(cfg, spec.delta_scale)
    draws = _field_draws(spec.noise, spec.perturb_a1)

    def run(e1: float) -> DecoherencePoint:
        point_cfg = base.with_drive(float(e1), spec.a1_ratio)
        trajectory = mean_rabi_trajectory(point_cfg, draws, spec.t_grid)
        return _fit_point(float(e1), trajectory, spec.window)

    points = parallel_map(run, list(spec.drive_grid), threads)
    logger.info(
        "[decoherence] %d drive points, %d flagged, %d window-limited",
        len(points),
        sum(p.flagged for p in points),
        sum(p.window_limited for p in points),
    )
    return points

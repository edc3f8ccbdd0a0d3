"""Pulsed time-domain histograms, residual extraction and residual analysis."""
from __future__ import annotations

import dataclasses
import logging
import math
from typing import Optional, Union

import numpy as np
import numpy.typing as npt

from app.errors import DomainError, FitError, FitNotAttempted
from app.experiment.pool import parallel_map
from app.fitdsp.least_squares import FitResult
from app.fitdsp.models import background_model, fit_background_model, fit_decaying_sinusoid
from app.lindblad.master_equation import evolve_master_equation, pl_signal
from app.model.hamiltonians import EX, EY, GROUND, basis_state, build_collapse_ops, make_full_hamiltonian
from app.model.params import LaserConfig, PulseProfile, RelaxationConfig, StrainDriveConfig
from app.specfun.rng import SeededRng, gaussian_sample
from app.specfun.spectrum import fft_magnitude_spectrum
from app.timeseries import TimeSeries

logger = logging.getLogger(__name__)

MIN_RESIDUAL_SPAN = 30.0


def laser_envelope(t: Union[float, npt.ArrayLike], pulse: PulseProfile):
    """Field factor of the pulse train at t, in [closed_field_fraction, 1]."""
    return pulse.envelope(t)


@dataclasses.dataclass(frozen=True)
class HistogramSpec:
    pulse: PulseProfile = dataclasses.field(default_factory=PulseProfile)
    diffusion_draws: int = 50
    diffusion_sigma: float = 0.030
    random_drive_phase: bool = True
    bin_width: float = 0.1
    time_span: float = 60.0  # ns after the second pulse onset
    perturb_a1: bool = True
    normalize: bool = True
    alpha: float = 1.0
    beta: float = 0.6
    seed: int = 0
    tolerance: float = 1e-7

    def __post_init__(self) -> None:
        if self.pulse.pulse_count < 2:
            raise DomainError("histogram needs at least two pulses")
        if self.diffusion_draws < 1:
            raise DomainError("diffusion_draws must be at least 1")
        if self.diffusion_sigma < 0:
            raise DomainError("diffusion_sigma must be non-negative")
        if self.bin_width <= 0 or self.time_span <= 0:
            raise DomainError("bin_width and time_span must be positive")

    @property
    def window_start(self) -> float:
        return self.pulse.onset(1)

    def bins(self) -> npt.NDArray[np.float64]:
        count = int(round(self.time_span / self.bin_width))
        return np.arange(count + 1) * self.bin_width


def _draw(spec: HistogramSpec, index: int, base_phase: float) -> tuple[tuple[float, float, float], float]:
    rng = SeededRng(spec.seed, index)
    sigma = spec.diffusion_sigma
    e_e1 = gaussian_sample(rng, 0.0, sigma)
    e_e2 = gaussian_sample(rng, 0.0, sigma)
    e_a1 = gaussian_sample(rng, 0.0, sigma)
    phase = rng.uniform(0.0, 2.0 * math.pi) if spec.random_drive_phase else base_phase
    return (e_a1 if spec.perturb_a1 else 0.0, e_e1, e_e2), phase


def _mean_populations(
    spec: HistogramSpec,
    cfg: StrainDriveConfig,
    laser: LaserConfig,
    relax: RelaxationConfig,
    threads: Optional[int],
) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]:
    """Draw-averaged rho11(t), rho22(t) on the histogram bins."""
    pulsed = laser.model_copy(update={"pulse": spec.pulse})
    ops = build_collapse_ops(relax)
    bins = spec.bins()
    grid = np.concatenate([[0.0], spec.window_start + bins])
    edge = min(spec.pulse.rise_time, spec.pulse.pulse_width)
    max_step = 0.5 * edge if edge > 0 else 0.1
    spread = spec.diffusion_sigma > 0 or spec.random_drive_phase
    draws = spec.diffusion_draws if spread else 1

    def run(index: int) -> npt.NDArray[np.float64]:
        # rows: rho11, rho22 after the t=0 seed point
        pert, phase = _draw(spec, index, cfg.phase_m)
        draw_cfg = cfg.model_copy(update={"phase_m": phase})
        result = evolve_master_equation(
            make_full_hamiltonian(draw_cfg, pulsed, pert),
            ops,
            basis_state(GROUND),
            grid,
            tol=spec.tolerance,
            max_step=max_step,
        )
        return np.stack([result.populations(EX)[1:], result.populations(EY)[1:]])

    traces = parallel_map(run, range(draws), threads)
    mean = np.mean(traces, axis=0)
    return mean[0], mean[1]


def time_domain_histogram(
    spec: HistogramSpec,
    cfg: StrainDriveConfig,
    laser: LaserConfig,
    relax: RelaxationConfig,
    threads: Optional[int] = None,
) -> TimeSeries:
    """PL rate after the second pulse onset, averaged over spectral-diffusion draws.

    Each draw perturbs (E_A1, E_E1, E_E2) by N(0, sigma^2) and, if enabled,
    picks a uniform drive phase. With normalize set, alpha is chosen so the
    zero-drive histogram peaks at 1.0.
    """
    rho11, rho22 = _mean_populations(spec, cfg, laser, relax, threads)
    alpha = zero_drive_alpha(spec, cfg, laser, relax, threads) if spec.normalize else spec.alpha
    return TimeSeries(spec.bins(), pl_signal(rho11, rho22, alpha, spec.beta))


def zero_drive_alpha(
    spec: HistogramSpec,
    cfg: StrainDriveConfig,
    laser: LaserConfig,
    relax: RelaxationConfig,
    threads: Optional[int] = None,
) -> float:
    """alpha that puts the peak of the undriven histogram at 1.0."""
    undriven = cfg.model_copy(update={"A1": 0.0, "E1": 0.0})
    ref11, ref22 = _mean_populations(spec, undriven, laser, relax, threads)
    peak = float((ref11 + spec.beta * ref22).max())
    if peak <= 0:
        raise DomainError("zero-drive reference histogram has no signal to normalize against")
    return 1.0 / peak


def extract_residual(histogram: TimeSeries) -> TimeSeries:
    """Percent deviation (data - fit) / fit * 100 from the slow background fit.

    Raises
    ------
    FitError
        If the background fit does not converge; the result is attached.
    """
    span = float(histogram.t[-1] - histogram.t[0]) if len(histogram) else 0.0
    if span < MIN_RESIDUAL_SPAN:
        raise DomainError(f"residual extraction needs >= {MIN_RESIDUAL_SPAN} ns of histogram, got {span}")
    fit = fit_background_model(histogram)
    if not fit.converged:
        raise FitError(f"background fit did not converge after {fit.iterations} iterations", result=fit)
    model = background_model(fit.params, histogram.t - histogram.t[0])
    if np.any(model == 0):
        raise FitError("background fit crosses zero; percent residual undefined", result=fit)
    return TimeSeries(histogram.t, (histogram.values - model) / model * 100.0)


@dataclasses.dataclass(frozen=True)
class ResidualAnalysis:
    omega_r: float  # GHz, NaN without a converged fit
    t2_rabi: float  # ns
    peak_frequency: float  # GHz, dominant non-DC FFT bin
    fit: Optional[FitResult] = None


def analyze_residual(residual: TimeSeries) -> ResidualAnalysis:
    """Rabi frequency and T2,Rabi of a percent residual.

    The decaying-sinusoid fit gives Omega_R and T2; the FFT peak is reported
    alongside as a fit-free check. A residual holding NaN gives all NaN.
    """
    if len(residual) < 5 or not np.all(np.isfinite(residual.values)):
        return ResidualAnalysis(math.nan, math.nan, math.nan)
    centered = TimeSeries(residual.t, residual.values - residual.values.mean())
    peak_frequency, _ = fft_magnitude_spectrum(centered).peak()
    try:
        fit = fit_decaying_sinusoid(residual)
    except FitNotAttempted as e:
        logger.info("[rabi_time] residual fit not attempted (%s)", e)
        return ResidualAnalysis(math.nan, math.nan, peak_frequency)
    except FitError as e:
        logger.warning("[rabi_time] residual fit failed (%s)", e)
        return ResidualAnalysis(math.nan, math.nan, peak_frequency, e.result)
    if not fit.converged:
        return ResidualAnalysis(math.nan, math.nan, peak_frequency, fit)
    return ResidualAnalysis(fit[1], fit[2], peak_frequency, fit)

"""Fit models: PL background, decaying sinusoid and PLE doublet."""
from __future__ import annotations

import dataclasses
import logging
import math

import numpy as np
import numpy.typing as npt
from scipy.signal import find_peaks, peak_widths

from app.errors import DomainError, FitNotAttempted
from app.fitdsp.least_squares import FitResult, levenberg_marquardt
from app.specfun.spectrum import fft_magnitude_spectrum
from app.timeseries import TimeSeries

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi

# background oscillation limits: omega_k <= 2 pi * 0.1 rad/ns, tau_k >= 5 ns
OMEGA_K_MAX = TWO_PI * 0.1
TAU_K_MIN = 5.0

PEAK_TO_FLOOR = 3.0


# -- background model ---------------------------------------------------------


def background_model(p: npt.NDArray[np.float64], t: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
    """y = a + b exp(-t/tau_f) + c cos(omega_k t + phi) exp(-t/tau_k).

    p = (a, b, tau_f, c, omega_k, tau_k, phi); omega_k in rad/ns.
    """
    a, b, tau_f, c, omega_k, tau_k, phi = p
    return a + b * np.exp(-t / tau_f) + c * np.cos(omega_k * t + phi) * np.exp(-t / tau_k)


def _exponential(p, t):
    a, b, tau = p
    return a + b * np.exp(-t / tau)


def _seed_exponential(data: TimeSeries) -> np.ndarray:
    t, y = data.t, data.values
    tail = max(1, y.size // 10)
    a = float(np.mean(y[-tail:]))
    b = float(y[0] - a)
    span = float(t[-1] - t[0])
    shifted = (y - a) * np.sign(b or 1.0)
    ok = shifted > 0.05 * abs(b)
    tau = span / 4.0
    if ok.sum() >= 3:
        slope = np.polyfit(t[ok], np.log(shifted[ok]), 1)[0]
        if slope < 0:
            tau = -1.0 / slope
    return np.array([a, b, min(max(tau, 1e-3), 10.0 * span)])


def _best_damped_oscillation(t, r, omegas, taus) -> tuple[float, float, float, float]:
    """Grid search for (c, omega, tau, phi) with linear amplitude solves."""
    best = (0.0, float(omegas[0]), float(taus[0]), 0.0)
    best_sse = float(r @ r)
    for omega in omegas:
        for tau in taus:
            env = np.exp(-t / tau)
            basis = np.column_stack([np.cos(omega * t) * env, np.sin(omega * t) * env])
            coef, *_ = np.linalg.lstsq(basis, r, rcond=None)
            sse = float(np.sum((r - basis @ coef) ** 2))
            if sse < best_sse:
                best_sse = sse
                best = (float(math.hypot(*coef)), float(omega), float(tau), float(math.atan2(-coef[1], coef[0])))
    return best


def fit_background_model(data: TimeSeries) -> FitResult:
    """Fit the slow PL background with bounds omega_k <= 2 pi 0.1, tau_k >= 5 ns.

    Time in the returned parameters is measured from the first sample.
    """
    if len(data) < 7:
        raise DomainError("background fit needs at least seven samples")
    t = data.t - data.t[0]
    shifted = TimeSeries(t, data.values)
    seed = _seed_exponential(shifted)
    span = float(t[-1])
    stage1 = levenberg_marquardt(
        _exponential,
        shifted,
        seed,
        bounds=[(-np.inf, np.inf), (-np.inf, np.inf), (1e-3, np.inf)],
    )
    resid = shifted.values - _exponential(stage1.params, t)
    omegas = np.linspace(TWO_PI * 0.002, OMEGA_K_MAX, 25)
    taus = np.geomspace(TAU_K_MIN, max(10.0 * span, 2 * TAU_K_MIN), 12)
    c, omega, tau, phi = _best_damped_oscillation(t, resid, omegas, taus)
    a, b, tau_f = stage1.params
    init = np.array([a, b, tau_f, c, omega, tau, phi])
    bounds = [
        (-np.inf, np.inf),
        (-np.inf, np.inf),
        (1e-3, np.inf),
        (0.0, np.inf),
        (0.0, OMEGA_K_MAX),
        (TAU_K_MIN, np.inf),
        (-2 * math.pi, 2 * math.pi),
    ]
    init = np.clip(init, [lo for lo, _ in bounds], [hi for _, hi in bounds])
    fit = levenberg_marquardt(background_model, shifted, init, bounds=bounds)
    logger.debug("[fit] background params %s", np.array2string(fit.params, precision=4))
    return fit


# -- decaying sinusoid --------------------------------------------------------


def damped_cosine(p: npt.NDArray[np.float64], t: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
    """y = A cos(2 pi Omega_R t + phase) exp(-t/T2) + offset; p = (A, Omega_R, T2, offset, phase)."""
    amp, omega_r, t2, offset, phase = p
    return amp * np.cos(TWO_PI * omega_r * t + phase) * np.exp(-t / t2) + offset


def _refined_peak(freqs: np.ndarray, mags: np.ndarray, k: int) -> float:
    if 0 < k < mags.size - 1:
        left, mid, right = mags[k - 1], mags[k], mags[k + 1]
        denom = left - 2 * mid + right
        if denom < 0:
            shift = 0.5 * (left - right) / denom
            return float(freqs[k] + shift * (freqs[1] - freqs[0]))
    return float(freqs[k])


def fit_decaying_sinusoid(residual: TimeSeries) -> FitResult:
    """Fit A cos(2 pi Omega_R t + phase) exp(-t/T2) + offset.

    Omega_R is seeded from the FFT peak, then amplitude, phase and offset from
    linear solves over a geometric T2 grid.

    Raises
    ------
    FitNotAttempted
        For a constant series or when no spectral peak clears the noise floor.
    """
    y = residual.values
    if len(residual) < 5:
        raise DomainError("decaying-sinusoid fit needs at least five samples")
    if np.ptp(y) <= 1e-12 * max(1.0, float(np.abs(y).max())):
        raise FitNotAttempted("constant series, no oscillation to fit")
    spec = fft_magnitude_spectrum(TimeSeries(residual.t, y - y.mean()))
    mags = spec.magnitudes[1:]
    k = int(np.argmax(mags))
    floor = float(np.median(mags))
    if mags[k] <= PEAK_TO_FLOOR * floor:
        raise FitNotAttempted(f"spectral peak {mags[k]:.3g} below {PEAK_TO_FLOOR} x noise floor {floor:.3g}")
    f0 = _refined_peak(spec.frequencies[1:], mags, k)

    t = residual.t
    dt = residual.dt
    window = float(t[-1] - t[0])
    best = None
    for t2 in np.geomspace(max(2 * dt, window / 50.0), 1e3 * window, 40):
        env = np.exp(-t / t2)
        basis = np.column_stack([np.cos(TWO_PI * f0 * t) * env, np.sin(TWO_PI * f0 * t) * env, np.ones_like(t)])
        coef, *_ = np.linalg.lstsq(basis, y, rcond=None)
        sse = float(np.sum((y - basis @ coef) ** 2))
        if best is None or sse < best[0]:
            best = (sse, t2, coef)
    _, t2, (alpha, beta, offset) = best
    init = np.array([math.hypot(alpha, beta), f0, t2, offset, math.atan2(-beta, alpha)])
    bounds = [
        (0.0, np.inf),
        (0.0, 0.5 / dt),
        (1e-3, np.inf),
        (-np.inf, np.inf),
        (-2 * math.pi, 2 * math.pi),
    ]
    return levenberg_marquardt(damped_cosine, residual, init, bounds=bounds)


# -- PLE doublet ---------------------------------------------------------------


def lorentzian_pair(p: npt.NDArray[np.float64], x: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
    """bg + sum_i A_i w_i^2 / ((x - c_i)^2 + w_i^2); p = (bg, A1, c1, w1, A2, c2, w2), w = HWHM."""
    bg, a1, c1, w1, a2, c2, w2 = p
    return bg + a1 * w1**2 / ((x - c1) ** 2 + w1**2) + a2 * w2**2 / ((x - c2) ** 2 + w2**2)


def lorentzian(p: npt.NDArray[np.float64], x: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
    bg, a, c, w = p
    return bg + a * w**2 / ((x - c) ** 2 + w**2)


@dataclasses.dataclass(frozen=True)
class DoubletFit:
    center1: float
    center2: float
    splitting: float
    resolved: bool
    fit: FitResult


def fit_ple_doublet(detunings: npt.ArrayLike, pl: npt.ArrayLike, prominence: float = 0.05) -> DoubletFit:
    """Two-Lorentzian fit of a PLE slice; splitting = |center1 - center2|.

    A slice with fewer than two peaks above prominence * ptp(pl) comes back
    unresolved, with the single-Lorentzian center in both slots.
    """
    x = np.asarray(detunings, dtype=float)
    y = np.asarray(pl, dtype=float)
    if x.shape != y.shape or x.size < 8:
        raise DomainError("doublet fit needs matching detuning/PL arrays of at least eight points")
    order = np.argsort(x)
    x, y = x[order], y[order]
    data = TimeSeries(x, y)
    height = float(np.ptp(y))
    lo, hi = float(x[0]), float(x[-1])
    step = float(np.min(np.diff(x)))
    bg = float(np.min(y))
    peaks, props = find_peaks(y, prominence=prominence * height if height > 0 else None)

    if peaks.size < 2:
        k = int(np.argmax(y))
        widths = peak_widths(y, [k], rel_height=0.5)[0]
        w = max(0.5 * float(widths[0]) * step, step)
        fit = levenberg_marquardt(
            lorentzian,
            data,
            [bg, max(y[k] - bg, 0.0), x[k], w],
            bounds=[(-np.inf, np.inf), (0.0, np.inf), (lo, hi), (step / 10, hi - lo)],
        )
        c = fit[2]
        return DoubletFit(c, c, 0.0, False, fit)

    top = peaks[np.argsort(props["prominences"])[-2:]]
    top.sort()
    widths = peak_widths(y, top, rel_height=0.5)[0]
    init = [bg]
    for k, width in zip(top, widths):
        init += [max(y[k] - bg, 0.0), x[k], max(0.5 * float(width) * step, step)]
    bounds = [(-np.inf, np.inf)] + [(0.0, np.inf), (lo, hi), (step / 10, hi - lo)] * 2
    fit = levenberg_marquardt(lorentzian_pair, data, init, bounds=bounds)
    c1, c2 = sorted((fit[2], fit[5]))
    return DoubletFit(c1, c2, abs(c2 - c1), True, fit)

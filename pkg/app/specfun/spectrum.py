from __future__ import annotations

import dataclasses

import numpy as np
import numpy.typing as npt

from app.errors import DomainError
from app.timeseries import TimeSeries


@dataclasses.dataclass(frozen=True)
class Spectrum:
    frequencies: npt.NDArray[np.float64]  # GHz
    magnitudes: npt.NDArray[np.float64]

    def peak(self, skip_dc: bool = True) -> tuple[float, float]:
        """(frequency, magnitude) of the largest bin."""
        start = 1 if skip_dc and self.magnitudes.size > 1 else 0
        idx = start + int(np.argmax(self.magnitudes[start:]))
        return float(self.frequencies[idx]), float(self.magnitudes[idx])


def _next_pow2(n: int) -> int:
    return 1 << (n - 1).bit_length()


def fft_magnitude_spectrum(series: TimeSeries) -> Spectrum:
    """One-sided, unnormalized |X_m| of a uniformly sampled series.

    The series is zero-padded to the next power of two; with time in ns the
    frequency axis is in GHz.
    """
    if len(series) < 2:
        raise DomainError("spectrum needs at least two samples")
    if not series.is_uniform():
        raise DomainError("spectrum needs a uniform time grid")
    n = _next_pow2(len(series))
    mags = np.abs(np.fft.rfft(series.values, n=n))
    freqs = np.fft.rfftfreq(n, d=series.dt)
    return Spectrum(freqs, mags)

from app.specfun.rng import SeededRng, gaussian_sample
from app.specfun.special import (
    arg_gamma,
    bessel_j,
    bessel_j_orders,
    bessel_j_range,
    log_gamma_complex,
)
from app.specfun.spectrum import Spectrum, fft_magnitude_spectrum

__all__ = [
    "SeededRng",
    "Spectrum",
    "arg_gamma",
    "bessel_j",
    "bessel_j_orders",
    "bessel_j_range",
    "fft_magnitude_spectrum",
    "gaussian_sample",
    "log_gamma_complex",
]

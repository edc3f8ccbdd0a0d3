from app.fitdsp.least_squares import FitResult, levenberg_marquardt
from app.fitdsp.models import (
    DoubletFit,
    background_model,
    damped_cosine,
    fit_background_model,
    fit_decaying_sinusoid,
    fit_ple_doublet,
    lorentzian_pair,
)

__all__ = [
    "DoubletFit",
    "FitResult",
    "background_model",
    "damped_cosine",
    "fit_background_model",
    "fit_decaying_sinusoid",
    "fit_ple_doublet",
    "levenberg_marquardt",
    "lorentzian_pair",
]

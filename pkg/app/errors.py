from __future__ import annotations

from typing import Any, Optional


class OrbitalFloquetError(Exception):
    """Base class for every error raised by the simulation package."""


class DomainError(OrbitalFloquetError, ValueError):
    """Input outside the range an operation is defined on."""


class ConfigError(OrbitalFloquetError, ValueError):
    """Run config could not be parsed or failed validation."""


class RegimeError(DomainError):
    """Parameters outside the validity regime of an approximation."""


class NumericalError(OrbitalFloquetError, RuntimeError):
    pass


class IntegrationError(NumericalError):
    def __init__(self, message: str, t: Optional[float] = None) -> None:
        super().__init__(message if t is None else f"{message} (t={t:.6g} ns)")
        self.t = t


class TruncationError(NumericalError):
    def __init__(self, message: str, boundary_weight: float) -> None:
        super().__init__(f"{message} (boundary weight {boundary_weight:.3e})")
        self.boundary_weight = boundary_weight


class FitError(NumericalError):
    def __init__(self, message: str, result: Any = None) -> None:
        super().__init__(message)
        self.result = result


class FitNotAttempted(FitError):
    """No spectral peak stands above the noise floor; the fit was skipped."""

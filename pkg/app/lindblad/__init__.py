from app.lindblad.master_equation import (
    EvolutionDiagnostics,
    EvolutionResult,
    StepStats,
    average_populations,
    evolve_master_equation,
    pl_signal,
)

__all__ = [
    "EvolutionDiagnostics",
    "EvolutionResult",
    "StepStats",
    "average_populations",
    "evolve_master_equation",
    "pl_signal",
]

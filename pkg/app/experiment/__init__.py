from app.experiment.decoherence import DecoherencePoint, DecoherenceSpec, decoherence_monte_carlo
from app.experiment.ple import PleMap, SweepSpec, ple_slice_doublet, ple_sweep
from app.experiment.pool import parallel_map, resolve_threads
from app.experiment.time_domain import (
    HistogramSpec,
    ResidualAnalysis,
    analyze_residual,
    extract_residual,
    laser_envelope,
    time_domain_histogram,
    zero_drive_alpha,
)

__all__ = [
    "DecoherencePoint",
    "DecoherenceSpec",
    "HistogramSpec",
    "PleMap",
    "ResidualAnalysis",
    "SweepSpec",
    "analyze_residual",
    "decoherence_monte_carlo",
    "extract_residual",
    "laser_envelope",
    "parallel_map",
    "ple_slice_doublet",
    "ple_sweep",
    "resolve_threads",
    "time_domain_histogram",
    "zero_drive_alpha",
]

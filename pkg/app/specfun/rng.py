from __future__ import annotations

import math

import numpy as np

from app.errors import DomainError

_U64_MASK = (1 << 64) - 1


class SeededRng:
    """PCG64 stream keyed by (master_seed, stream_index).

    Each Monte Carlo sample owns its own stream, so results do not depend on
    how samples are scheduled across workers.
    """

    def __init__(self, master_seed: int, stream_index: int = 0) -> None:
        if master_seed < 0 or master_seed > _U64_MASK:
            raise DomainError(f"master seed {master_seed} is not a 64-bit unsigned integer")
        if stream_index < 0:
            raise DomainError(f"stream index {stream_index} must be non-negative")
        self.master_seed = int(master_seed)
        self.stream_index = int(stream_index)
        seq = np.random.SeedSequence(entropy=self.master_seed, spawn_key=(self.stream_index,))
        self._gen = np.random.Generator(np.random.PCG64(seq))

    def __repr__(self) -> str:
        return f"SeededRng(master_seed={self.master_seed}, stream_index={self.stream_index})"

    def random(self) -> float:
        """Uniform draw in [0, 1)."""
        return float(self._gen.random())

    def uniform(self, low: float = 0.0, high: float = 1.0) -> float:
        return low + (high - low) * self.random()


def gaussian_sample(rng: SeededRng, mean: float, sigma: float) -> float:
    """One N(mean, sigma^2) draw via Box-Muller. Consumes two uniforms."""
    if sigma < 0 or math.isnan(sigma):
        raise DomainError(f"sigma must be non-negative, got {sigma}")
    u1 = 1.0 - rng.random()  # (0, 1], keeps log finite
    u2 = rng.random()
    if sigma == 0:
        return float(mean)
    return mean + sigma * math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

"""
Seeded generators for weights, synthetic mixtures and jitter
"""
import numpy as np

from app.core.errors import MalformedConfig


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator; seeds are non-negative integers"""
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) or seed < 0:
        raise MalformedConfig(f"seed must be a non-negative integer, got {seed!r}")
    return np.random.Generator(np.random.PCG64(int(seed)))

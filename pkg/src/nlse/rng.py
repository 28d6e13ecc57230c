"""Seed derivation and platform-stable Gaussian draws."""
from __future__ import annotations

import numpy as np


def derive_seed(*keys: int) -> int:
    """64-bit child seed determined by the key tuple alone."""
    state = np.random.SeedSequence([int(k) for k in keys]).generate_state(2, np.uint32)
    return int(state[0]) << 32 | int(state[1])


def generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed)))


def standard_normals(seed: int, count: int) -> np.ndarray:
    """Box-Muller normals driven by a Philox counter stream."""
    gen = generator(seed)
    half = (count + 1) // 2
    u = gen.random((half, 2))
    r = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
    theta = 2.0 * np.pi * u[:, 1]
    out = np.empty((half, 2))
    out[:, 0] = r * np.cos(theta)
    out[:, 1] = r * np.sin(theta)
    return out.reshape(-1)[:count]

"""SplitMix64 uniform stream.

The generator is counter based, so any implementation can reproduce the
stream from the seed alone. Draw ``i`` (1-based) of seed ``s`` is

    z = (s + i * 0x9E3779B97F4A7C15)          mod 2**64
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9  mod 2**64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB  mod 2**64
    z =  z ^ (z >> 31)
    u = (z >> 11) * 2**-53                    in [0, 1)

Streams for different seeds are used as independent streams; parallel work
must use distinct seeds.
"""
from __future__ import annotations

import numpy as np

from .errors import DomainError

GAMMA = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
MASK64 = (1 << 64) - 1

_CHUNK = 1 << 20


def check_seed(seed) -> int:
    seed = int(seed)
    if not 0 <= seed <= MASK64:
        raise DomainError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def splitmix64_scalar(seed: int, count: int) -> list[int]:
    """Pure-integer reference; slow, used to pin the vectorized path."""
    state = check_seed(seed)
    out = []
    for _ in range(count):
        state = (state + GAMMA) & MASK64
        z = state
        z = ((z ^ (z >> 30)) * MIX1) & MASK64
        z = ((z ^ (z >> 27)) * MIX2) & MASK64
        out.append(z ^ (z >> 31))
    return out


def splitmix64(seed: int, start: int, count: int) -> np.ndarray:
    """Raw 64-bit outputs for draws ``start + 1 .. start + count``."""
    seed = check_seed(seed)
    idx = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(seed) + idx * np.uint64(GAMMA)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX2)
    return z ^ (z >> np.uint64(31))


def uniforms(seed: int, count: int) -> np.ndarray:
    """``count`` doubles in [0, 1) from the seed's stream."""
    out = np.empty(count, dtype=float)
    for lo in range(0, count, _CHUNK):
        n = min(_CHUNK, count - lo)
        raw = splitmix64(seed, lo, n)
        out[lo : lo + n] = (raw >> np.uint64(11)).astype(float) * 2.0**-53
    return out

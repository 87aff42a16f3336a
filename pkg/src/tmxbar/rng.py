"""Reproducible randomness.

All randomness in the simulator flows from a single root seed through
named sub-streams (train, d2d, c2c, csa, ...), so one component can be
re-seeded or swept without disturbing the draws of any other. Stream
derivation hashes the name path with SHA-256, which is stable across
platforms and Python versions.

Stochastic decisions inside the training kernels do not consume
sequential generator state. They are computed from counter hashes
(splitmix64 finalizer over an event key), so the compiled kernel and the
numpy fallback consume exactly the same randomness in any evaluation
order and produce bit-identical models.
"""

from __future__ import annotations

import hashlib

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF
# splitmix64 increment and finalizer multipliers (Steele et al.).
GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def derive_seed(root_seed: int, *path: int | str) -> int:
    """Derive a 64-bit seed for the sub-stream named by *path*."""
    h = hashlib.sha256()
    h.update(str(int(root_seed)).encode())
    for part in path:
        h.update(b"/")
        h.update(str(part).encode())
    return int.from_bytes(h.digest()[:8], "little")


def stream(root_seed: int, *path: int | str) -> np.random.Generator:
    """Independent numpy generator for the sub-stream named by *path*."""
    return np.random.default_rng(derive_seed(root_seed, *path))


def mix64(x: int) -> int:
    """splitmix64 finalizer of a 64-bit value (Python ints)."""
    x = (x + GOLDEN) & MASK64
    x ^= x >> 30
    x = (x * _MIX1) & MASK64
    x ^= x >> 27
    x = (x * _MIX2) & MASK64
    x ^= x >> 31
    return x


def mix64_pair(a: int, b: int) -> int:
    """Hash two 64-bit values into one. Used to key per-event streams."""
    return mix64((mix64(a) ^ (b & MASK64)) & MASK64)


def hash_uniform(key: int) -> float:
    """Uniform in [0, 1) from a 64-bit key, identical in both kernels."""
    return (mix64(key) >> 11) * (1.0 / 9007199254740992.0)


def mix64_array(x: np.ndarray) -> np.ndarray:
    """Vectorized splitmix64 finalizer over a uint64 array."""
    x = (x + np.uint64(GOLDEN)).astype(np.uint64)
    x ^= x >> np.uint64(30)
    x *= np.uint64(_MIX1)
    x ^= x >> np.uint64(27)
    x *= np.uint64(_MIX2)
    x ^= x >> np.uint64(31)
    return x


def hash_uniform_array(keys: np.ndarray) -> np.ndarray:
    """Vectorized counterpart of hash_uniform."""
    bits = mix64_array(keys.astype(np.uint64)) >> np.uint64(11)
    return bits * (1.0 / 9007199254740992.0)

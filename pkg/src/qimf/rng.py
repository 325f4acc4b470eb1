"""Deterministic RNG derivation.

All randomness in the package flows from a single 64-bit seed.  Independent
streams for different roles ("model", "shots", ...) are derived by hashing
``"{seed}:{role}"`` with BLAKE2b and feeding the 64-bit digest to PCG64.
Streams for distinct roles are statistically independent and reproducible
across platforms.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(seed: int, role: str) -> int:
    """Hash (seed, role) into a 64-bit sub-seed."""
    digest = hashlib.blake2b(f"{seed}:{role}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def rng_for(seed: int, role: str) -> np.random.Generator:
    """Named PCG64 stream for one role under the given master seed."""
    return np.random.Generator(np.random.PCG64(derive_seed(seed, role)))

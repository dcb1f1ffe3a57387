"""Seed derivation.

Every random stream is a pure function of ``(master_seed, trial, name)``.
The name is hashed with CRC32 so streams for different purposes (graph
sampling, exploration tie-breaks, ...) never collide for the same trial.
"""
from __future__ import annotations

import random
import zlib

import numpy as np


def seed_sequence(master: int, trial: int = 0, name: str = "") -> np.random.SeedSequence:
    return np.random.SeedSequence([int(master), int(trial), zlib.crc32(name.encode("utf-8"))])


def stream(master: int, trial: int = 0, name: str = "") -> np.random.Generator:
    """Independent PCG64 generator for one (seed, trial, purpose) triple."""
    return np.random.Generator(np.random.PCG64(seed_sequence(master, trial, name)))


def as_generator(rng) -> np.random.Generator:
    """Accept a Generator, an int seed or None."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def py_random(rng) -> random.Random:
    """Python ``random.Random`` seeded from ``rng``; used by the tight per-step loops."""
    gen = as_generator(rng)
    return random.Random(int(gen.integers(0, 2**63 - 1)))

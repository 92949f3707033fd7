"""Deterministic random number generation.

Every randomized operation in the toolkit takes an explicit integer seed and
draws from a Philox counter-based bit generator. Philox streams are identical
across platforms and word sizes, so a (seed, operation) pair fully determines
the output everywhere.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed: int) -> np.random.Generator:
    """Generator seeded for one top-level operation."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def child_rng(seed: int, index: int) -> np.random.Generator:
    """Generator for the ``index``-th work item under a master ``seed``.

    Derived via a spawn key, so per-item streams are independent of each
    other and of the master stream; parallel schedules cannot change them.
    """
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(index,))
    return np.random.Generator(np.random.Philox(ss))

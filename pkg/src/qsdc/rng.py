"""Seeded, splittable random streams.

Every session derives its generators from one 64-bit seed through numpy's
``SeedSequence``; each stochastic role gets its own stream so that adding
draws in one role never shifts another.
"""

from __future__ import annotations

import numpy as np

RNG_ALGORITHM = "numpy.random.PCG64/SeedSequence"

STREAMS = ("distribution", "verification", "message", "bob", "alice", "eve", "chsh")

SEED_MASK = (1 << 64) - 1


def make_rng(seed: int | np.random.SeedSequence) -> np.random.Generator:
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed & SEED_MASK)
    return np.random.Generator(np.random.PCG64(ss))


def session_streams(seed: int) -> dict[str, np.random.Generator]:
    children = np.random.SeedSequence(seed & SEED_MASK).spawn(len(STREAMS))
    return {name: make_rng(ss) for name, ss in zip(STREAMS, children)}


def derive_seed(base: int, *counters: int) -> int:
    """Counter-split a child seed, e.g. ``derive_seed(seed, point, trial)``."""
    ss = np.random.SeedSequence([base & SEED_MASK, *counters])
    return int(ss.generate_state(1, dtype=np.uint64)[0])

"""Seeded counter-based random streams.

Every stochastic operation draws from ``stream(seed, index)``: a numpy
``Generator`` over the Philox bit generator whose key is derived from ``seed``
and whose counter starts at ``index << 64``. Two indices never share counter
blocks for any realistic draw count, so sub-stream ``index`` is a pure function
of ``(seed, index)`` regardless of how many other sub-streams exist or in which
order they are consumed.
"""

import numpy as np


def stream_key(seed: int) -> np.ndarray:
    """128-bit Philox key for ``seed``."""
    return np.random.SeedSequence(seed).generate_state(2, np.uint64)


def stream(seed: int, index: int = 0, key: np.ndarray | None = None) -> np.random.Generator:
    """Generator for sub-stream ``index`` of ``seed``.

    Args:
        seed: Non-negative master seed.
        index: Non-negative sub-stream index (episode, replicate, ...).
        key: Precomputed ``stream_key(seed)``, to skip re-deriving it in loops.

    Returns:
        A fresh generator positioned at the start of the sub-stream.
    """
    if key is None:
        key = stream_key(seed)
    return np.random.Generator(np.random.Philox(key=key, counter=int(index) << 64))


def derive_seed(seed: int, *path: int) -> int:
    """Child seed for a nested run (e.g. replication m of grid point K)."""
    state = np.random.SeedSequence(seed, spawn_key=tuple(int(p) for p in path)).generate_state(2, np.uint32)
    return (int(state[0]) << 32) | int(state[1])

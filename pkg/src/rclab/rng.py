"""Counter-based random streams built on numpy's Philox generator.

Every draw in the package is addressed by (seed, stream, counter): a fresh
Philox key is derived per address, so replicas and sweeps are reproducible
independently of execution order and no generator state is ever carried
between calls.  Stream ids must fit in 16 bits and counters in 48.
"""

from __future__ import annotations

import numpy as np

_STREAM_BITS = 48
_MAX_STREAM = 1 << 16
_MAX_COUNTER = 1 << _STREAM_BITS


def keyed_generator(seed: int, stream: int = 0, counter: int = 0) -> np.random.Generator:
    """Generator for one (seed, stream, counter) cell of the key space."""
    if not 0 <= stream < _MAX_STREAM:
        raise ValueError(f"stream id out of range: {stream}")
    if not 0 <= counter < _MAX_COUNTER:
        raise ValueError(f"counter out of range: {counter}")
    key = np.array([np.uint64(seed & (2**64 - 1)),
                    np.uint64((stream << _STREAM_BITS) | counter)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def sweep_uniforms(seed: int, stream: int, sweep: int, n: int) -> np.ndarray:
    """The n uniforms consumed by one sweep; index in the array = edge/vertex index."""
    return keyed_generator(seed, stream, sweep).random(n)

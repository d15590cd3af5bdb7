"""Deterministic random substreams.

Every stochastic quantity is drawn from a generator derived from
``(seed, *key)`` so that results do not depend on evaluation order or on
how an index range is split between workers.
"""

from __future__ import annotations

import numpy as np

BLOCK = 4096


def substream(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def blocked_uniform(seed: int, tag: int, count: int, width: int) -> np.ndarray:
    """``count`` rows of ``width`` uniforms, generated in fixed blocks of ``BLOCK`` rows."""
    out = np.empty((count, width))
    for b, start in enumerate(range(0, count, BLOCK)):
        stop = min(count, start + BLOCK)
        out[start:stop] = substream(seed, tag, b).random((stop - start, width))
    return out

"""Counter-based random streams.

Every stream is addressed by ``(seed, *keys)`` so the draws of a given
replicate or Monte Carlo run never depend on scheduling order.
"""

from __future__ import annotations

import numpy as np


def stream(seed: int, *keys: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))

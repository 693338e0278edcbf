"""Counter-based random streams.

Every stochastic run in the package draws from a Philox generator keyed by
(seed0, member index). Streams are therefore independent of execution order
and of how an ensemble is partitioned across workers: member k sees the same
numbers whether it runs first, last, or in a different process.
"""

import numpy as np


def member_rng(seed0: int, index: int) -> np.random.Generator:
    """Generator for ensemble member `index` of the run seeded by `seed0`."""
    if seed0 < 0 or index < 0:
        raise ValueError("seed0 and index must be non-negative")
    key = np.array([seed0, index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))

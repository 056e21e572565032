"""Deterministic seed-splitting shared by every stochastic routine.

Replica ``k`` of master seed ``s`` always draws from
``SeedSequence(s, spawn_key=(k,))``.  The mapping is documented numpy
behaviour, stable across process boundaries and numpy versions, so any
(seed, replica-count) pair reproduces the same streams no matter how the
replicas are scheduled.
"""

from __future__ import annotations

import numpy as np

__all__ = ["replica_rng"]


def replica_rng(seed: int, index: int = 0) -> np.random.Generator:
    """Return the generator for replica ``index`` of master ``seed``."""
    if index < 0:
        raise ValueError(f"replica index must be >= 0, got {index}")
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))

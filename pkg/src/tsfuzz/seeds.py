"""Indexed seed derivation so that results never depend on execution order."""

import numpy as np


def derive_seed(base: int, *keys: int) -> int:
    """A 63-bit integer seed for the stream ``base`` / ``keys``."""
    ss = np.random.SeedSequence(int(base), spawn_key=tuple(int(k) for k in keys))
    hi, lo = ss.generate_state(2, dtype=np.uint32)
    return int((int(hi) << 32 | int(lo)) & ((1 << 63) - 1))

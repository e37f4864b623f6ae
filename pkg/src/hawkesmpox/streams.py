"""Deterministic random streams keyed by (master seed, path, channel)."""

import numpy as np

#: stream slot reserved for the Brownian increments of a path
BROWNIAN = 0


def derive_stream(master_seed: int, path_index: int, slot: int) -> np.random.Generator:
    """Independent generator for one (path, slot) pair.

    Slots 1..4 are the Hawkes channels, slot 0 the Brownian drivers. The
    result depends only on the three integers, so paths can run in any
    order or process and still reproduce.
    """
    if master_seed < 0 or path_index < 0 or slot < 0:
        raise ValueError("seed, path index and slot must be non-negative")
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(path_index), int(slot)))
    return np.random.Generator(np.random.PCG64(seq))

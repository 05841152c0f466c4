from __future__ import annotations

import hashlib

import numpy as np

MAX_SEED = 2**64 - 1


def purpose_key(purpose: str) -> int:
    digest = hashlib.sha256(purpose.encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big")


def validate_seed(seed: int) -> int:
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed <= MAX_SEED:
        raise ValueError(f"Seed must be an unsigned 64-bit integer, got {seed!r}.")
    return seed


def derive_seed(root: int, purpose: str, *indices: int) -> int:
    """Child seed for one purpose of a run.

    The same (root, purpose, indices) always yields the same child, and
    distinct purposes never share a stream, so a partial rerun reproduces
    exactly the randomness it would have had inside a full run.
    """
    validate_seed(root)
    sequence = np.random.SeedSequence(
        entropy=root,
        spawn_key=(purpose_key(purpose), *(int(index) for index in indices)),
    )
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def make_rng(root: int, purpose: str, *indices: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(root, purpose, *indices))

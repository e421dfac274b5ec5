"""Derived, order-independent random streams.

Every stochastic draw in the toolkit takes its generator from
``derive_rng(seed, *labels)``: the stream depends only on the seed and the
labels, never on how many draws happened before it.
"""

import hashlib
from typing import Union

import numpy as np

Label = Union[str, int]


def _label_key(label: Label) -> int:
    """Map a label to a stable non-negative integer."""
    if isinstance(label, bool):
        label = int(label)
    if isinstance(label, int):
        if label < 0:
            raise ValueError(f"Integer labels must be non-negative, got {label}")
        return label
    digest = hashlib.blake2b(str(label).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def make_seed_sequence(seed: int, *labels: Label) -> np.random.SeedSequence:
    """Build the seed sequence for ``(seed, *labels)``."""
    if seed < 0:
        raise ValueError(f"Seed must be non-negative, got {seed}")
    return np.random.SeedSequence(entropy=seed, spawn_key=tuple(_label_key(lb) for lb in labels))


def derive_rng(seed: int, *labels: Label) -> np.random.Generator:
    """Return a PCG64 generator derived from ``(seed, *labels)``."""
    return np.random.Generator(np.random.PCG64(make_seed_sequence(seed, *labels)))

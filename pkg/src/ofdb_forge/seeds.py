"""Seed keys for reproducible, worker-count-independent randomness.

Every random decision in the package is keyed by a :class:`SeedKey`, a
(master_seed, stream_index) pair of 64-bit unsigned integers.  Distinct pairs
give statistically independent streams; identical pairs give bit-identical
streams on every machine and for any degree of parallelism.

Sub-streams (the chaos-game draw of a category, the augmentation draw of one
image, the shuffle of one epoch) are derived with :meth:`SeedKey.child`, which
mixes integer tags into a fresh 64-bit stream index via BLAKE2b.  The tag
constants below namespace the purposes so unrelated draws never share a
stream.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

import numpy as np

_U64 = 2**64

# Purpose tags for derived streams.
TAG_CLOUD = 1  # chaos-game point generation for a category
TAG_AUG = 2    # per-image augmentation draw
TAG_PLAN = 3   # epoch shuffle / rotation draws
TAG_PLAN_AUG = 4  # per-entry augmentation seeds inside an epoch plan


def mix_streams(*parts: int) -> int:
    """Hash integer parts into one uniformly distributed 64-bit stream index."""
    h = hashlib.blake2b(digest_size=8)
    for p in parts:
        if p < 0:
            raise ValueError(f"stream parts must be non-negative, got {p}")
        h.update(struct.pack("<Q", p % _U64))
    return int.from_bytes(h.digest(), "little")


@dataclass(frozen=True)
class SeedKey:
    """A (master seed, stream index) pair naming one reproducible RNG stream."""

    master_seed: int
    stream_index: int = 0

    def __post_init__(self):
        for name in ("master_seed", "stream_index"):
            v = getattr(self, name)
            if not 0 <= v < _U64:
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {v}")

    def rng(self) -> np.random.Generator:
        """Fresh PCG64 generator for this key; repeated calls restart the stream."""
        ss = np.random.SeedSequence(entropy=[self.master_seed, self.stream_index])
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, *tags: int) -> "SeedKey":
        """Derive a sub-stream key by mixing tags into the stream index."""
        if not tags:
            raise ValueError("child() needs at least one tag")
        return SeedKey(self.master_seed, mix_streams(self.stream_index, *tags))

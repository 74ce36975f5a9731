"""Deterministic random number streams.

Every sampler takes an explicit ``numpy.random.Generator``; nothing in the
package touches the global numpy state.  ``RngStream`` is the value type
used at the experiment layer: a (seed, stream_id) pair that always
materializes the same generator, with ``child`` for deriving statistically
independent substreams (parallel chains, or the core/augmentation split of
the transcoding sampler).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_id: int = 0

    def __post_init__(self):
        if not (0 <= self.seed < 2**64):
            raise ValueError("seed must be a 64-bit unsigned integer")
        if not (0 <= self.stream_id < 2**64):
            raise ValueError("stream_id must be a 64-bit unsigned integer")

    def generator(self) -> np.random.Generator:
        """Fresh generator; identical (seed, stream_id) gives identical draws."""
        seq = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        return np.random.default_rng(seq)

    def child(self, index: int) -> "RngStream":
        """Derive an independent substream, deterministically.

        The child's stream_id is hashed from (stream_id, index) so children
        of distinct parents or indices never collide in practice.
        """
        seq = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id, index))
        derived = int(seq.generate_state(1, np.uint64)[0])
        return RngStream(self.seed, derived)

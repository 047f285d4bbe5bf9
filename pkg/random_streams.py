# --- Random Streams Module ---
"""
Seeded, counter-based random streams.

Every stream is a numpy Generator over the Philox-4x64 counter-based bit
generator, keyed by a numpy SeedSequence built from a tuple of integers.
The same key always yields the same stream on every platform, and a stream
can fork named children (per replication, per round) without consuming
draws from the parent.
"""

import hashlib
from typing import Tuple, Union

import numpy as np

Label = Union[int, str]


def _label_to_int(label: Label) -> int:
    if isinstance(label, (int, np.integer)):
        value = int(label)
        if value < 0:
            raise ValueError(f"stream labels must be non-negative, got {value}")
        return value
    # stable across interpreter runs, unlike hash()
    digest = hashlib.sha256(str(label).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


class RandomStream:
    """A reproducible random stream identified by its key"""

    def __init__(self, *key: Label):
        self.key: Tuple[int, ...] = tuple(_label_to_int(label) for label in key) or (0,)
        seed_sequence = np.random.SeedSequence(list(self.key))
        self.generator = np.random.Generator(np.random.Philox(seed_sequence))

    def fork(self, *labels: Label) -> "RandomStream":
        """Independent child stream; deterministic in (parent key, labels)"""
        return RandomStream(*self.key, *labels)

    # Thin passthroughs keep call sites short
    def normal(self, loc=0.0, scale=1.0, size=None):
        return self.generator.normal(loc, scale, size)

    def uniform(self, low=0.0, high=1.0, size=None):
        return self.generator.uniform(low, high, size)

    def integers(self, low, high=None, size=None):
        return self.generator.integers(low, high, size)

    def __repr__(self) -> str:
        return f"RandomStream(key={self.key})"


def replication_stream(base_seed: int, policy_index: int, replication_index: int) -> RandomStream:
    """Stream owned by one (policy, replication) run"""
    return RandomStream(base_seed, "run", policy_index, replication_index)


def instance_stream(base_seed: int, replication_index: int) -> RandomStream:
    """Stream used to draw a random instance; shared by all policies in a replication"""
    return RandomStream(base_seed, "instance", replication_index)

# engine/random_stream.py
from typing import Tuple

import numpy as np

from engine.errors import DomainError

_UINT64_MAX = 2**64 - 1


class RandomStream:
    """Reproducible random stream identified by (base_seed, stream_id).

    Streams are derived with numpy's SeedSequence spawn keys: the stream
    (base_seed, parent path + (stream_id,)) never shares state with a stream
    that has a different key, so replicate i of a Monte Carlo experiment can
    simply use ``stream_id = i``.

    A stream owns a mutable generator and must stay confined to one thread.
    """

    def __init__(self, base_seed: int, stream_id: int = 0, parent_key: Tuple[int, ...] = ()):
        if not (0 <= int(base_seed) <= _UINT64_MAX):
            raise DomainError(f"[engine/random_stream.py] base_seed must be a 64-bit unsigned integer, got {base_seed}")
        if not (0 <= int(stream_id) <= _UINT64_MAX):
            raise DomainError(f"[engine/random_stream.py] stream_id must be a 64-bit unsigned integer, got {stream_id}")
        self.base_seed = int(base_seed)
        self.stream_id = int(stream_id)
        self.spawn_key: Tuple[int, ...] = tuple(parent_key) + (self.stream_id,)
        self._generator = None

    @property
    def generator(self) -> np.random.Generator:
        """The numpy generator backing this stream, created on first use."""
        if self._generator is None:
            seq = np.random.SeedSequence(entropy=self.base_seed, spawn_key=self.spawn_key)
            self._generator = np.random.Generator(np.random.PCG64(seq))
        return self._generator

    def substream(self, stream_id: int) -> "RandomStream":
        """Child stream keyed below this one; independent of this stream's draws."""
        return RandomStream(self.base_seed, stream_id, parent_key=self.spawn_key)

    def fresh(self) -> "RandomStream":
        """Same identity, generator rewound to the start of the stream."""
        return RandomStream(self.base_seed, self.stream_id, parent_key=self.spawn_key[:-1])

    def __repr__(self) -> str:
        return f"RandomStream(base_seed={self.base_seed}, spawn_key={self.spawn_key})"

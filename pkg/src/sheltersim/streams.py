"""Named, reproducible uniform-random streams.

Every stochastic input to a run is drawn from a stream identified by
(master seed, replication index, stream name). The same triple always yields
the same draw sequence, on any platform, which is what makes replications
repeatable and lets swept scenarios share common random numbers.
"""

from __future__ import annotations

import hashlib

import numpy as np

_BLOCK = 512


def _name_key(name: str) -> int:
    """Stable 64-bit key for a stream name (not Python's salted hash)."""
    return int.from_bytes(hashlib.sha256(name.encode("utf-8")).digest()[:8], "little")


class RngStream:
    """Buffered uniform [0, 1) stream backed by PCG64.

    Draws are consumed one at a time in a fixed order; the n-th call to
    ``uniform()`` returns the same value no matter what happened between
    calls elsewhere.
    """

    __slots__ = ("name", "_gen", "_buf", "_pos")

    def __init__(self, master_seed: int, replication: int, name: str):
        if master_seed < 0 or replication < 0:
            raise ValueError("master_seed and replication must be non-negative")
        self.name = name
        seq = np.random.SeedSequence([int(master_seed), int(replication), _name_key(name)])
        self._gen = np.random.Generator(np.random.PCG64(seq))
        self._buf: list[float] = []
        self._pos = 0

    def uniform(self) -> float:
        """Next draw in [0, 1)."""
        if self._pos == len(self._buf):
            self._buf = self._gen.random(_BLOCK).tolist()
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return u

"""Seeded random streams with deterministic substream derivation.

A stream is identified by ``(master_seed, stream_id)``.  The pair is fed to
``numpy.random.SeedSequence`` as entropy plus spawn key, so distinct ids give
independent PCG64 streams and identical ids reproduce the same draws.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

_U64 = (1 << 64) - 1


def derive_stream_id(*parts: object) -> int:
    """Hash an arbitrary tuple of labels into a stable 64-bit stream id.

    Uses BLAKE2b over the ``repr`` of each part, so the result does not depend
    on ``PYTHONHASHSEED`` or the process that computes it.
    """
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        h.update(repr(part).encode())
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "little")


@dataclass(frozen=True)
class RngStream:
    master_seed: int
    stream_id: int = 0

    def __post_init__(self) -> None:
        for name in ("master_seed", "stream_id"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or not 0 <= int(value) <= _U64:
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {value!r}")

    def generator(self) -> np.random.Generator:
        """A fresh generator positioned at the start of this stream."""
        seq = np.random.SeedSequence(int(self.master_seed), spawn_key=(int(self.stream_id),))
        return np.random.Generator(np.random.PCG64(seq))

    def substream(self, *parts: object) -> "RngStream":
        """Child stream keyed by this stream's id and ``parts``."""
        return RngStream(self.master_seed, derive_stream_id(self.stream_id, *parts))


def as_generator(rng: RngStream | np.random.Generator) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return rng.generator()

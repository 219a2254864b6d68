"""Deterministic, label-derived random streams.

Every sampler in the package is a pure function of its parameters and an
`RngStream`.  A stream is identified by a 64-bit master seed plus an ordered
path of (name, index) labels; the pair is hashed into a Philox key, so

* the same (seed, labels) reproduces the identical bit stream on every run
  and platform, and
* distinct label paths give statistically independent streams (counter-based
  generator under independent keys).

Streams are immutable: calling `generator()` twice returns two generators
that emit the same sequence.  Derive children for distinct purposes instead
of reusing one stream twice.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

_DOMAIN = b"hamlab-rng-v1"


@dataclass(frozen=True)
class RngStream:
    master_seed: int
    labels: tuple[tuple[str, int], ...] = ()

    def child(self, name: str, index: int = 0) -> "RngStream":
        """Derive an independent stream for (name, index)."""
        return RngStream(self.master_seed, self.labels + ((name, int(index)),))

    def key_bytes(self) -> bytes:
        h = hashlib.sha256()
        h.update(_DOMAIN)
        h.update((int(self.master_seed) & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little"))
        for name, index in self.labels:
            raw = name.encode("utf-8")
            h.update(len(raw).to_bytes(4, "little"))
            h.update(raw)
            h.update(int(index).to_bytes(8, "little", signed=True))
        return h.digest()

    def generator(self) -> np.random.Generator:
        """Fresh generator; repeated calls replay the same sequence."""
        key = np.frombuffer(self.key_bytes()[:16], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

"""Deterministic stream derivation for Monte Carlo experiments.

Every random draw in the package flows through an RngStream.  A stream is a
(base_seed, stream_id) pair mapped onto a counter-based Philox generator, so
any labelled substream (per trial, per architecture, per resolution) can be
reconstructed independently of execution order or worker count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1

DEFAULT_SEED = 12345

# fixed domain labels used when deriving substreams
DOMAIN_SCENE = 1
DOMAIN_TRIAL = 2
DOMAIN_BOOTSTRAP = 3
DOMAIN_VERIFY = 4


def _mix(z: int) -> int:
    # splitmix64 finalizer: bijective 64-bit mixing, platform independent
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & _MASK64
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & _MASK64
    z ^= z >> 31
    return z


@dataclass(frozen=True)
class RngStream:
    """Addressable random stream: base seed plus a derived 64-bit stream id."""

    base_seed: int
    stream_id: int = 0

    def __post_init__(self) -> None:
        if not isinstance(self.base_seed, int) or not isinstance(self.stream_id, int):
            raise TypeError("seed and stream id must be integers")

    def child(self, *path: int) -> "RngStream":
        """Derive a substream from integer path labels (order matters)."""
        sid = self.stream_id & _MASK64
        for label in path:
            sid = _mix(sid ^ _mix(int(label) & _MASK64))
        return RngStream(self.base_seed, sid)

    def generator(self) -> np.random.Generator:
        """Fresh Philox generator keyed by (base_seed, stream_id)."""
        key = ((self.stream_id & _MASK64) << 64) | (self.base_seed & _MASK64)
        return np.random.Generator(np.random.Philox(key=key))

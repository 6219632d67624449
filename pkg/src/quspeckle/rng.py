"""Deterministic, splittable random number generation.

All sampling in the toolkit flows through :class:`RngState`, an immutable
handle over a Philox4x64-10 counter-based generator (as shipped by numpy).
The generator is keyed by the 128-bit pair ``(seed, stream)``, so a state is
fully described by two integers and reproduces the same draws on every
platform for a given numpy major version. Derived streams come from the
SplitMix64 finalizer over a Weyl sequence, which is also the documented
per-image seed derivation used by dataset generation:

    image_seed(base, index) = splitmix64(base + (index + 1) * GOLDEN  mod 2^64)

Keeping stream derivation arithmetic (rather than stateful) is what makes
dataset bytes independent of worker count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_M64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15  # 2^64 / golden ratio, the SplitMix64 increment


def splitmix64(z: int) -> int:
    """SplitMix64 finalizer: a 64-bit bijective mixing function."""
    z = (z + GOLDEN) & _M64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return z ^ (z >> 31)


def derive_image_seed(base_seed: int, index: int) -> int:
    """Per-image seed for image ``index`` of a dataset built from ``base_seed``."""
    if index < 0:
        raise ValueError(f"index must be >= 0, got {index}")
    return splitmix64((base_seed + (index + 1) * GOLDEN) & _M64)


@dataclass(frozen=True)
class RngState:
    """Immutable handle for a deterministic random stream.

    Operations taking an ``RngState`` are pure: the same state always yields
    the same draws. Use :meth:`child` to derive independent substreams for
    parallel or structured work; never share one live generator across tasks.
    """

    seed: int
    stream: int = 0

    def __post_init__(self):
        if not 0 <= self.seed <= _M64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if not 0 <= self.stream <= _M64:
            raise ValueError(f"stream must be a 64-bit unsigned integer, got {self.stream}")

    def generator(self) -> np.random.Generator:
        """Fresh numpy Generator positioned at the start of this stream."""
        key = np.array([self.seed, self.stream], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def child(self, index: int) -> "RngState":
        """Derive the ``index``-th independent substream of this state."""
        if index < 0:
            raise ValueError(f"child index must be >= 0, got {index}")
        return RngState(self.seed, splitmix64(self.stream ^ splitmix64(index)))

"""Reproducible random frame-window selection.

Every random decision is drawn from an :class:`RngStream` whose state is a
pure function of ``(base_seed, repeat_index, video_id)``.  Workers never
share a generator, so the order in which videos or repeats are processed
has no influence on the draws.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TooFewFrames
from .featurestore import FrameFeatureMatrix

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3

DEFAULT_SEQUENCE_LENGTH = 5


def mix64(z: int) -> int:
    """SplitMix64 output finalizer (Stafford variant 13)."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def fnv1a64(text: str) -> int:
    h = FNV_OFFSET
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * FNV_PRIME) & MASK64
    return h


def derive_state(base_seed: int, repeat_index: int, video_id: str) -> int:
    s = mix64((base_seed & MASK64) + GOLDEN_GAMMA)
    s = mix64(s ^ ((repeat_index & 0xFFFFFFFF) * GOLDEN_GAMMA & MASK64))
    return mix64(s ^ fnv1a64(video_id))


class RngStream:
    """SplitMix64 generator tagged with the provenance it was derived from."""

    __slots__ = ("state", "provenance")

    def __init__(self, state: int, provenance=None):
        self.state = state & MASK64
        self.provenance = provenance

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        return mix64(self.state)

    def integers(self, n: int) -> int:
        """Uniform integer in ``[0, n)`` by rejection, free of modulo bias."""
        if n < 1:
            raise ValueError("n must be positive")
        if n == 1:
            return 0
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def random(self) -> float:
        """Uniform double in ``[0, 1)`` from the top 53 bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def numpy_generator(self) -> np.random.Generator:
        """A numpy generator seeded from the next 64-bit draw (for bulk draws)."""
        return np.random.Generator(np.random.PCG64(self.next_u64()))

    def copy(self) -> "RngStream":
        return RngStream(self.state, self.provenance)

    def __repr__(self):
        return f"RngStream(state={self.state:#018x}, provenance={self.provenance!r})"


def make_rng(base_seed: int, repeat_index: int, video_id: str) -> RngStream:
    return RngStream(
        derive_state(base_seed, repeat_index, video_id),
        (base_seed, repeat_index, video_id),
    )


@dataclass(frozen=True)
class SequenceSample:
    video_id: str
    start: int
    length: int
    features: np.ndarray
    mos_label: float = float("nan")


def sample_sequence(
    features: FrameFeatureMatrix,
    length: int,
    rng: RngStream,
    mos_label: float = float("nan"),
) -> SequenceSample:
    """Pick ``length`` consecutive frames starting at a uniform random index.

    The start is drawn from ``0 .. n_frames - length`` inclusive.
    """
    if length < 1:
        raise ValueError("sequence length must be >= 1")
    n = features.n_frames
    if n < length:
        raise TooFewFrames(features.video_id, n, length)
    start = rng.integers(n - length + 1)
    return SequenceSample(
        features.video_id, start, length, features.values[start:start + length], mos_label
    )

"""Temporal mean / standard-deviation pooling of frame features."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteError, UndefinedStd


@dataclass(frozen=True)
class PooledFeature:
    mean: np.ndarray
    std: np.ndarray
    n: int

    @property
    def concat(self) -> np.ndarray:
        return np.concatenate([self.mean, self.std])

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def _as_frames(f) -> np.ndarray:
    arr = np.asarray(f, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected an L x D matrix, got shape {arr.shape}")
    if arr.shape[0] == 0:
        raise ValueError("cannot pool an empty sequence")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError("non-finite value in frame features")
    return arr


def pool_mean(f) -> np.ndarray:
    """Per-dimension average over frames, in float64."""
    arr = _as_frames(f)
    return arr.sum(axis=0) / arr.shape[0]


def pool_std(f) -> np.ndarray:
    """Per-dimension sample standard deviation with the ``n - 1`` denominator.

    Two-pass: the mean is subtracted before squaring.  Raises
    :class:`UndefinedStd` for fewer than two frames.
    """
    arr = _as_frames(f)
    n = arr.shape[0]
    if n < 2:
        raise UndefinedStd(f"standard deviation needs at least 2 frames, got {n}")
    dev = arr - arr.sum(axis=0) / n
    return np.sqrt((dev * dev).sum(axis=0) / (n - 1))


def pool_concat(f) -> PooledFeature:
    arr = _as_frames(f)
    return PooledFeature(pool_mean(arr), pool_std(arr), arr.shape[0])

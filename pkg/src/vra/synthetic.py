"""Synthetic feature stores with a known label model, for tests and demos."""
from __future__ import annotations

import numpy as np

from .featurestore import build_store
from .pooling import pool_concat


def make_linear_store(root, n_videos=300, dim=16, frames=(5, 30), noise=0.1, seed=0,
                      latent_dim=3, splits=None):
    """Store whose MOS is an affine function of each video's pooled feature.

    Frame features follow a low-rank model, as backbone embeddings tend to:
    a video's feature level is ``A @ z`` for a ``latent_dim``-dimensional
    ``z`` plus a little idiosyncratic noise, and frames scatter around that
    level with a per-video amplitude times a fixed per-dimension profile.

    The label is ``weights @ pool_concat(all frames).concat + bias`` plus
    Gaussian ``noise``, with weights scaled so the noiseless labels have
    mean 3 and standard deviation 0.8; labels are clipped into [1, 5].

    Returns ``(store, weights, bias)``.
    """
    rng = np.random.default_rng(seed)
    mixing = rng.normal(0.0, 1.0, (dim, latent_dim)) / np.sqrt(latent_dim)
    profile = rng.uniform(0.5, 1.5, dim)
    lo, hi = frames
    mats, pooled = [], []
    for _ in range(n_videos):
        n = int(rng.integers(lo, hi + 1))
        level = mixing @ rng.normal(0.0, 1.0, latent_dim) + 0.05 * rng.normal(0.0, 1.0, dim)
        amp = rng.uniform(0.05, 0.3)
        mat = (level + amp * profile * rng.normal(0.0, 1.0, (n, dim))).astype(np.float32)
        mats.append(mat)
        pooled.append(pool_concat(mat).concat)
    pooled = np.array(pooled)
    w = np.concatenate([rng.normal(0.0, 1.0, dim), rng.normal(0.0, 0.5, dim)])
    raw = pooled @ w
    scale = 0.8 / raw.std()
    bias = 3.0 - raw.mean() * scale
    labels = np.clip(raw * scale + bias + rng.normal(0.0, noise, n_videos), 1.0, 5.0)
    ids = [f"vid{i:04d}" for i in range(n_videos)]
    store = build_store(root, zip(ids, labels, mats), splits)
    return store, w * scale, bias

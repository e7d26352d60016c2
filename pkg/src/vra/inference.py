"""Repeated stochastic prediction, averaging and two-model blending."""
from __future__ import annotations

import csv
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatchError,
    DuplicateIdError,
    ManifestError,
    MissingFileError,
    NonFiniteError,
)
from .featurestore import FeatureStore
from .pooling import pool_concat
from .regressor import RegressorParams, forward
from .sampler import DEFAULT_SEQUENCE_LENGTH, RngStream, make_rng, sample_sequence

DEFAULT_REPEATS = 10


@dataclass(frozen=True)
class PredictionSet:
    video_ids: list
    values: np.ndarray  # (repeats, videos)
    base_seed: int = 0

    @property
    def repeats(self) -> int:
        return self.values.shape[0]

    def save_matrix(self, path):
        """Audit dump: header ``repeat,<ids...>`` then one row per repeat."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["repeat"] + list(self.video_ids))
            for r, row in enumerate(self.values):
                w.writerow([r] + [repr(float(x)) for x in row])

    @classmethod
    def load_matrix(cls, path, base_seed=0) -> "PredictionSet":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        ids = rows[0][1:]
        values = np.array([[float(x) for x in row[1:]] for row in rows[1:]], dtype=np.float64)
        return cls(ids, values.reshape(len(rows) - 1, len(ids)), base_seed)


@dataclass(frozen=True)
class EnsembleConfig:
    weight_a: float = 0.75
    weight_b: float = 0.25

    def __post_init__(self):
        if not (math.isfinite(self.weight_a) and math.isfinite(self.weight_b)):
            raise ValueError("ensemble weights must be finite")


def _params(model) -> RegressorParams:
    return getattr(model, "params", model)


def _seq_length(model, length):
    if length is not None:
        return length
    config = getattr(model, "config", None)
    return config.sequence_length if config is not None else DEFAULT_SEQUENCE_LENGTH


def predict_video(model, store: FeatureStore, video_id: str, rng: RngStream, length=None) -> float:
    """Sample one window, pool it and run the head in eval mode."""
    seq = sample_sequence(store.load(video_id), _seq_length(model, length), rng)
    return forward(_params(model), pool_concat(seq.features), "eval")


def predict_repeated(model, store: FeatureStore, video_ids, repeats: int = DEFAULT_REPEATS,
                     base_seed: int = 0, length=None, workers: int = 1) -> PredictionSet:
    """``repeats`` x ``len(video_ids)`` predictions.

    Cell ``(r, v)`` draws its window from ``make_rng(base_seed, r, video_ids[v])``
    so the matrix does not depend on ``workers`` or evaluation order.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    video_ids = list(video_ids)
    if len(set(video_ids)) != len(video_ids):
        raise DuplicateIdError("video_ids contain duplicates")
    length = _seq_length(model, length)
    values = np.empty((repeats, len(video_ids)))

    def cell(rv):
        r, v = rv
        vid = video_ids[v]
        values[r, v] = predict_video(model, store, vid, make_rng(base_seed, r, vid), length)

    cells = list(itertools.product(range(repeats), range(len(video_ids))))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(cell, cells))
    else:
        for c in cells:
            cell(c)
    if not np.all(np.isfinite(values)):
        raise NonFiniteError("non-finite prediction")
    return PredictionSet(video_ids, values, base_seed)


def average_predictions(p: PredictionSet) -> np.ndarray:
    """Per-video mean over repeats."""
    vals = np.asarray(p.values if isinstance(p, PredictionSet) else p, dtype=np.float64)
    if vals.ndim != 2 or vals.shape[0] < 1:
        raise ValueError("need a non-empty repeats x videos matrix")
    return vals.sum(axis=0) / vals.shape[0]


def pairwise_consistency_rmse(p: PredictionSet) -> float:
    """Mean RMSE over all unordered pairs of repeat rows."""
    vals = np.asarray(p.values if isinstance(p, PredictionSet) else p, dtype=np.float64)
    R = vals.shape[0]
    if R < 2:
        raise ValueError("pairwise consistency needs at least two repeats")
    total = 0.0
    for i in range(R - 1):
        d = vals[i + 1:] - vals[i]
        total += np.sqrt(np.mean(d * d, axis=1)).sum()
    return float(total / (R * (R - 1) / 2))


def ensemble_weighted(preds_a, preds_b, cfg: EnsembleConfig = EnsembleConfig(),
                      ids_a=None, ids_b=None) -> np.ndarray:
    """``weight_a * a + weight_b * b`` per video.

    When id lists are given they must match exactly, order included.
    """
    a = np.asarray(preds_a, dtype=np.float64)
    b = np.asarray(preds_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise DimensionMismatchError(f"prediction vectors differ in shape: {a.shape} vs {b.shape}")
    if ids_a is not None or ids_b is not None:
        if ids_a is None or ids_b is None or list(ids_a) != list(ids_b):
            raise ManifestError("prediction files list different videos or a different order")
    return cfg.weight_a * a + cfg.weight_b * b


# -- prediction files --------------------------------------------------------

PRED_HEADER = ("video_id", "predicted_mos")


def write_predictions(path, video_ids, values):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(PRED_HEADER)
        for vid, x in zip(video_ids, values):
            w.writerow([vid, repr(float(x))])


def read_predictions(path):
    """Return ``(video_ids, values)`` from a prediction file, in file order."""
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except FileNotFoundError as exc:
        raise MissingFileError(f"prediction file not found: {path}") from exc
    if not rows or tuple(rows[0]) != PRED_HEADER:
        raise ManifestError(f"{path}: expected header {','.join(PRED_HEADER)}")
    ids, vals = [], []
    for lineno, row in enumerate(rows[1:], 2):
        if not row:
            continue
        if len(row) != 2:
            raise ManifestError(f"{path}:{lineno}: expected 2 fields")
        try:
            x = float(row[1])
        except ValueError as exc:
            raise ManifestError(f"{path}:{lineno}: bad value {row[1]!r}") from exc
        if not math.isfinite(x):
            raise NonFiniteError(f"{path}:{lineno}: non-finite prediction")
        ids.append(row[0])
        vals.append(x)
    if len(set(ids)) != len(ids):
        raise DuplicateIdError(f"{path}: duplicate video_id")
    return ids, np.array(vals, dtype=np.float64)

"""Fully connected MOS regression head.

The head takes the pooled ``[mean, std]`` vector, applies inverted dropout
to it in training mode, then a stack of ReLU layers and a final linear unit.
Gradients of the batch RMSE are computed by hand; everything runs in
float64.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError
from .pooling import PooledFeature

DEFAULT_HIDDEN = (512, 128)


@dataclass
class RegressorParams:
    """Layer weights ``(out, in)`` and biases ``(out,)``, input layer first."""

    weights: list
    biases: list
    dropout_rate: float = 0.1

    def __post_init__(self):
        self.check()

    def check(self):
        if len(self.weights) != len(self.biases) or not self.weights:
            raise DimensionMismatchError("weights and biases must be non-empty and paired")
        prev = None
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[0],):
                raise DimensionMismatchError(f"layer {i}: weight {w.shape} / bias {b.shape}")
            if prev is not None and w.shape[1] != prev:
                raise DimensionMismatchError(f"layer {i}: input {w.shape[1]} != previous output {prev}")
            prev = w.shape[0]
        if prev != 1:
            raise DimensionMismatchError(f"final layer must have one output, has {prev}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[1]

    @property
    def layer_sizes(self) -> list:
        return [self.input_dim] + [w.shape[0] for w in self.weights]

    def arrays(self) -> list:
        """Flat ``[W0, b0, W1, b1, ...]`` view (shared memory, not copies)."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    @classmethod
    def from_arrays(cls, arrays, dropout_rate=0.1) -> "RegressorParams":
        return cls(list(arrays[0::2]), list(arrays[1::2]), dropout_rate)

    def copy(self) -> "RegressorParams":
        return RegressorParams(
            [w.copy() for w in self.weights], [b.copy() for b in self.biases], self.dropout_rate
        )

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(a)) for a in self.arrays())


@dataclass
class Gradients:
    weights: list
    biases: list = field(default_factory=list)

    def arrays(self) -> list:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    @classmethod
    def zeros_like(cls, params: RegressorParams) -> "Gradients":
        return cls([np.zeros_like(w) for w in params.weights], [np.zeros_like(b) for b in params.biases])


def init_params(input_dim, hidden_dims=DEFAULT_HIDDEN, dropout_rate=0.1, seed=0) -> RegressorParams:
    """Glorot-uniform weights, zero biases, deterministic in ``seed``."""
    hidden_dims = list(hidden_dims)
    if input_dim < 1 or any(h < 1 for h in hidden_dims):
        raise ValueError(f"invalid layer sizes: input {input_dim}, hidden {hidden_dims}")
    rng = np.random.default_rng(seed)
    sizes = [int(input_dim)] + [int(h) for h in hidden_dims] + [1]
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return RegressorParams(weights, biases, dropout_rate)


def dropout_mask(dim: int, rate: float, rng) -> np.ndarray:
    """Inverted-dropout multipliers: 0 with probability ``rate``, else 1/(1-rate).

    ``rng`` is an :class:`~vra.sampler.RngStream` or a numpy Generator.
    """
    if rate == 0.0:
        return np.ones(dim)
    gen = rng if isinstance(rng, np.random.Generator) else rng.numpy_generator()
    keep = gen.random(dim) >= rate
    return keep / (1.0 - rate)


def _input_vector(x) -> np.ndarray:
    if isinstance(x, PooledFeature):
        return x.concat
    return np.asarray(x, dtype=np.float64)


def _forward_batch(params, X, masks=None):
    a = X if masks is None else X * masks
    acts = [a]
    pre = []
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = a @ w.T + b
        pre.append(z)
        a = z if i == last else np.maximum(z, 0.0)
        acts.append(a)
    return a[:, 0], pre, acts


def predict_batch(params: RegressorParams, X, masks=None) -> np.ndarray:
    """Predictions for the rows of ``X``; no dropout unless ``masks`` given."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != params.input_dim:
        raise DimensionMismatchError(f"input dim {X.shape[1]} != head input dim {params.input_dim}")
    return _forward_batch(params, X, masks)[0]


def forward(params: RegressorParams, x, mode: str = "eval", rng=None) -> float:
    """Scalar MOS prediction for one pooled feature.

    In ``"train"`` mode the input is multiplied by a fresh dropout mask drawn
    from ``rng``; ``"eval"`` mode is deterministic.  The output is not
    clipped to the rating scale.
    """
    vec = _input_vector(x)
    if vec.shape != (params.input_dim,):
        raise DimensionMismatchError(f"input length {vec.shape} != head input dim {params.input_dim}")
    mask = None
    if mode == "train":
        if params.dropout_rate > 0.0:
            if rng is None:
                raise ValueError("train mode needs an rng for the dropout mask")
            mask = dropout_mask(vec.shape[0], params.dropout_rate, rng)[None, :]
    elif mode != "eval":
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    return float(_forward_batch(params, vec[None, :], mask)[0][0])


def loss_rmse(preds, labels) -> float:
    preds = np.asarray(preds, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if preds.shape != labels.shape:
        raise DimensionMismatchError(f"preds {preds.shape} vs labels {labels.shape}")
    if preds.size == 0:
        raise ValueError("empty batch")
    r = preds - labels
    return float(np.sqrt(np.mean(r * r)))


def backward(params: RegressorParams, X, labels, masks=None):
    """Batch RMSE and its gradient with respect to every weight and bias.

    Parameters
    ----------
    X : (B, input_dim) array of pooled features.
    labels : (B,) targets.
    masks : optional (B, input_dim) dropout multipliers, held fixed.

    Returns
    -------
    (loss, Gradients).  At zero loss all gradients are exactly zero; the
    ReLU derivative at 0 is taken as 0.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(labels, dtype=np.float64).reshape(-1)
    if X.shape[0] == 0:
        raise ValueError("empty batch")
    if X.shape[1] != params.input_dim or y.shape[0] != X.shape[0]:
        raise DimensionMismatchError(
            f"batch {X.shape} / labels {y.shape} incompatible with input dim {params.input_dim}"
        )
    if masks is not None:
        masks = np.asarray(masks, dtype=np.float64)
        if masks.shape != X.shape:
            raise DimensionMismatchError(f"mask shape {masks.shape} != batch shape {X.shape}")
    preds, pre, acts = _forward_batch(params, X, masks)
    resid = preds - y
    batch = X.shape[0]
    loss = float(np.sqrt(np.dot(resid, resid) / batch))
    grads = Gradients.zeros_like(params)
    if loss == 0.0:
        return loss, grads
    delta = (resid / (batch * loss))[:, None]
    for i in range(len(params.weights) - 1, -1, -1):
        grads.weights[i] = delta.T @ acts[i]
        grads.biases[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ params.weights[i]) * (pre[i - 1] > 0.0)
    return loss, grads

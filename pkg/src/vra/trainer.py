"""Training loop for the regression head.

AdamW with decoupled weight decay, gradient accumulation over micro-batches,
reduce-on-plateau learning-rate control and early stopping, both driven by
validation RMSE.  The best-validation parameters are what ``train`` returns.
"""
from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .errors import NonFiniteGradient, NumericError
from .featurestore import FeatureStore, SplitAssignment
from .pooling import pool_concat
from .regressor import (
    DEFAULT_HIDDEN,
    Gradients,
    RegressorParams,
    backward,
    dropout_mask,
    init_params,
    predict_batch,
)
from .sampler import make_rng, mix64, sample_sequence

log = logging.getLogger(__name__)

# keep training and validation draws apart from inference provenance
TRAIN_DOMAIN = 0x7452414E
VAL_DOMAIN = 0x0056414C

CONTINUE = "continue"
STOP = "stop"


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 2e-5
    batch_size: int = 2
    accumulation_steps: int = 8
    dropout_rate: float = 0.1
    sequence_length: int = 5
    max_epochs: int = 33
    early_stop_patience: int = 5
    sched_factor: float = 0.5
    sched_patience: int = 3
    sched_threshold: float = 1e-4
    min_lr: float = 1e-8
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.01
    hidden_dims: tuple = DEFAULT_HIDDEN
    output_bias_init: str = "label_mean"
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "hidden_dims", tuple(int(h) for h in self.hidden_dims))
        for name in ("learning_rate", "eps", "min_lr", "sched_factor"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.batch_size < 1 or self.accumulation_steps < 1 or self.sequence_length < 2:
            raise ValueError("batch_size and accumulation_steps must be >= 1, sequence_length >= 2")
        if self.max_epochs < 0 or self.early_stop_patience < 1 or self.sched_patience < 1:
            raise ValueError("max_epochs must be >= 0 and patience values >= 1")
        if not 0.0 <= self.dropout_rate < 1.0 or not 0.0 <= self.beta1 < 1.0 or not 0.0 <= self.beta2 < 1.0:
            raise ValueError("dropout_rate and betas must lie in [0, 1)")
        if self.weight_decay < 0 or self.sched_threshold < 0:
            raise ValueError("weight_decay and sched_threshold must be non-negative")
        if self.output_bias_init not in ("label_mean", "zero"):
            raise ValueError("output_bias_init must be 'label_mean' or 'zero'")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden_dims"] = list(self.hidden_dims)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown TrainConfig fields: {sorted(unknown)}")
        return cls(**d)


# -- AdamW ----------------------------------------------------------------------

@dataclass
class OptimizerState:
    m: list
    v: list
    t: int = 0
    lr: float = 2e-5

    @classmethod
    def zeros(cls, params: RegressorParams, lr: float) -> "OptimizerState":
        arrs = params.arrays()
        return cls([np.zeros_like(a) for a in arrs], [np.zeros_like(a) for a in arrs], 0, lr)

    def copy(self) -> "OptimizerState":
        return OptimizerState([a.copy() for a in self.m], [a.copy() for a in self.v], self.t, self.lr)


def adamw_step(state: OptimizerState, params: RegressorParams, grads: Gradients,
               beta1=0.9, beta2=0.999, eps=1e-8, weight_decay=0.01):
    """One AdamW update; returns new ``(params, state)`` and leaves inputs untouched.

    ``t`` is incremented before bias correction.  Weight decay uses the
    pre-update parameter value and is not scaled by the adaptive term.
    """
    g_arrays = grads.arrays()
    p_arrays = params.arrays()
    if len(g_arrays) != len(p_arrays):
        raise ValueError("gradient and parameter structures differ")
    for i, (g, p) in enumerate(zip(g_arrays, p_arrays)):
        if g.shape != p.shape:
            raise ValueError(f"array {i}: gradient shape {g.shape} != parameter shape {p.shape}")
        if not np.all(np.isfinite(g)):
            bad = int(np.sum(~np.isfinite(g)))
            raise NonFiniteGradient(
                f"non-finite gradient in array {i} ({bad} entries) at optimizer step {state.t + 1}"
            )
    t = state.t + 1
    lr = state.lr
    bc1 = 1.0 - beta1 ** t
    bc2 = 1.0 - beta2 ** t
    new_p, new_m, new_v = [], [], []
    for p, g, m, v in zip(p_arrays, g_arrays, state.m, state.v):
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * (g * g)
        m_hat = m / bc1
        v_hat = v / bc2
        new_p.append(p - lr * (m_hat / (np.sqrt(v_hat) + eps)) - lr * weight_decay * p)
        new_m.append(m)
        new_v.append(v)
    out = RegressorParams.from_arrays(new_p, params.dropout_rate)
    return out, OptimizerState(new_m, new_v, t, lr)


def accumulate_gradients(params: RegressorParams, micro_batches):
    """Mean loss and mean gradient over a group of micro-batches.

    Each item of ``micro_batches`` is ``(X, labels, masks)``; ``masks`` may
    be None.  Terms are summed in list order so the result is reproducible.
    """
    micro_batches = list(micro_batches)
    if not micro_batches:
        raise ValueError("empty accumulation group")
    total = Gradients.zeros_like(params)
    loss_sum = 0.0
    for X, y, masks in micro_batches:
        loss, g = backward(params, X, y, masks)
        loss_sum += loss
        for acc, part in zip(total.arrays(), g.arrays()):
            acc += part
    k = len(micro_batches)
    return loss_sum / k, Gradients([w / k for w in total.weights], [b / k for b in total.biases])


# -- plateau schedule and early stopping ---------------------------------------------

def _improved(value, best, threshold):
    return value < best * (1.0 - threshold)


@dataclass
class PlateauScheduler:
    lr: float
    factor: float = 0.5
    patience: int = 3
    threshold: float = 1e-4
    min_lr: float = 1e-8
    best: float = float("inf")
    num_bad: int = 0

    def step(self, val_loss: float) -> float:
        if _improved(val_loss, self.best, self.threshold):
            self.best = val_loss
            self.num_bad = 0
        else:
            self.num_bad += 1
            if self.num_bad >= self.patience:
                self.lr = max(self.lr * self.factor, self.min_lr)
                self.num_bad = 0
        return self.lr


def scheduler_update(sched: PlateauScheduler, val_loss: float) -> float:
    return sched.step(val_loss)


def early_stop_check(val_losses, patience: int, threshold: float = 1e-4) -> str:
    """``"stop"`` once ``patience`` epochs in a row brought no improvement."""
    val_losses = list(val_losses)
    if not val_losses:
        raise ValueError("early stopping needs at least one validation loss")
    best = float("inf")
    bad = 0
    for v in val_losses:
        if _improved(v, best, threshold):
            best = v
            bad = 0
        else:
            bad += 1
    return STOP if bad >= patience else CONTINUE


# -- the loop ----------------------------------------------------------------------

@dataclass
class EpochRecord:
    epoch: int
    train_rmse: float
    val_rmse: float
    lr: float
    wall_time: float


@dataclass
class TrainHistory:
    records: list = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    @property
    def val_losses(self) -> list:
        return [r.val_rmse for r in self.records]

    def losses_view(self) -> list:
        """Everything except wall time, i.e. the part that is reproducible."""
        return [(r.epoch, r.train_rmse, r.val_rmse, r.lr) for r in self.records]

    def to_dict(self) -> dict:
        return {"records": [asdict(r) for r in self.records]}

    @classmethod
    def from_dict(cls, d) -> "TrainHistory":
        return cls([EpochRecord(**r) for r in d["records"]])


@dataclass
class TrainedModel:
    params: RegressorParams
    opt_state: OptimizerState
    config: TrainConfig
    best_epoch: int = 0
    best_val_rmse: float = float("inf")


def _sample_inputs(store, ids, length, base_seed, repeat_index, dropout_rate=0.0):
    X = np.empty((len(ids), 2 * store.dim))
    masks = np.ones_like(X) if dropout_rate > 0.0 else None
    for row, vid in enumerate(ids):
        rng = make_rng(base_seed, repeat_index, vid)
        seq = sample_sequence(store.load(vid), length, rng)
        X[row] = pool_concat(seq.features).concat
        if masks is not None:
            masks[row] = dropout_mask(X.shape[1], dropout_rate, rng)
    return X, masks


def evaluate_rmse(params, store, ids, length, base_seed, repeat_index=0) -> float:
    X, _ = _sample_inputs(store, ids, length, base_seed, repeat_index)
    r = predict_batch(params, X) - store.labels(ids)
    return float(np.sqrt(np.mean(r * r)))


def train(config: TrainConfig, store: FeatureStore, splits: SplitAssignment,
          initial_params: RegressorParams | None = None,
          initial_state: OptimizerState | None = None):
    """Fit the head on ``splits.train_ids`` and select on ``splits.val_ids``.

    Each epoch the training ids are shuffled, every video contributes one
    freshly sampled window, micro-batches of ``batch_size`` are formed and
    one AdamW step is taken per ``accumulation_steps`` micro-batches (the
    last group of an epoch may be shorter).  Validation windows are fixed
    for the whole run so epochs are compared on identical inputs.

    Returns ``(TrainedModel, TrainHistory)`` where the model holds the
    parameters and optimizer state of the best validation epoch.
    """
    train_ids = list(splits.train_ids)
    val_ids = list(splits.val_ids)
    if not train_ids or not val_ids:
        raise ValueError("training needs non-empty train and validation splits")
    if initial_params is None:
        initial_params = init_params(2 * store.dim, config.hidden_dims, config.dropout_rate, config.seed)
        if config.output_bias_init == "label_mean":
            # labels sit near 3 on a 1-5 scale; Adam moves a bias ~lr per step
            initial_params.biases[-1][:] = store.labels(train_ids).mean()
    else:
        initial_params = replace(initial_params.copy(), dropout_rate=config.dropout_rate)
    if initial_params.input_dim != 2 * store.dim:
        raise ValueError(
            f"head input dim {initial_params.input_dim} does not match pooled dim {2 * store.dim}"
        )
    state = (initial_state.copy() if initial_state is not None
             else OptimizerState.zeros(initial_params, config.learning_rate))
    state.lr = config.learning_rate
    params = initial_params
    history = TrainHistory()
    best = TrainedModel(params.copy(), state.copy(), config, 0, float("inf"))
    if config.max_epochs == 0:
        return best, history

    sched = PlateauScheduler(config.learning_rate, config.sched_factor, config.sched_patience,
                             config.sched_threshold, config.min_lr)
    train_seed = mix64(config.seed ^ TRAIN_DOMAIN)
    val_seed = mix64(config.seed ^ VAL_DOMAIN)
    X_val, _ = _sample_inputs(store, val_ids, config.sequence_length, val_seed, 0)
    y_val = store.labels(val_ids)
    adam = dict(beta1=config.beta1, beta2=config.beta2, eps=config.eps,
                weight_decay=config.weight_decay)
    bs, k = config.batch_size, config.accumulation_steps

    for epoch in range(1, config.max_epochs + 1):
        t0 = time.perf_counter()
        lr_used = sched.lr
        state.lr = lr_used
        order = np.random.default_rng([config.seed, epoch]).permutation(len(train_ids))
        ids = [train_ids[i] for i in order]
        X, masks = _sample_inputs(store, ids, config.sequence_length, train_seed, epoch,
                                  config.dropout_rate)
        y = store.labels(ids)
        micro = [(X[i:i + bs], y[i:i + bs], None if masks is None else masks[i:i + bs])
                 for i in range(0, len(ids), bs)]
        losses = []
        for g0 in range(0, len(micro), k):
            group = micro[g0:g0 + k]
            try:
                loss, grads = accumulate_gradients(params, group)
                params, state = adamw_step(state, params, grads, **adam)
            except NumericError as exc:
                raise type(exc)(f"epoch {epoch}, step {state.t + 1}: {exc}") from exc
            losses.extend([loss] * len(group))
        train_rmse = float(np.mean(losses))
        r = predict_batch(params, X_val) - y_val
        val_rmse = float(np.sqrt(np.mean(r * r)))
        if not np.isfinite(val_rmse):
            raise NumericError(f"epoch {epoch}: validation RMSE is not finite")
        history.records.append(EpochRecord(epoch, train_rmse, val_rmse, lr_used,
                                           time.perf_counter() - t0))
        log.info("epoch %d train_rmse %.6f val_rmse %.6f lr %.3g", epoch, train_rmse, val_rmse, lr_used)
        if val_rmse < best.best_val_rmse:
            best = TrainedModel(params.copy(), state.copy(), config, epoch, val_rmse)
        sched.step(val_rmse)
        if early_stop_check(history.val_losses, config.early_stop_patience, config.sched_threshold) == STOP:
            log.info("early stopping after epoch %d (best epoch %d)", epoch, best.best_epoch)
            break
    return best, history


def finetune_on_all(model: TrainedModel, store: FeatureStore, splits: SplitAssignment,
                    config: TrainConfig | None = None):
    """Second phase: resume the selected checkpoint on train + validation.

    Early stopping still watches the validation ids, which are now part
    of the training data.
    """
    config = config or model.config
    merged = SplitAssignment(list(splits.train_ids) + list(splits.val_ids), list(splits.test_ids),
                             list(splits.val_ids), splits.seed, splits.ratios)
    return train(config, store, merged, model.params, model.opt_state)

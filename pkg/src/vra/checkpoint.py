"""Binary checkpoint files for trained heads.

Layout (little-endian)::

    b"VRAC"  version u16
    config_len u32, config JSON (utf-8)
    n_layers u32, then (out u32, in u32) per layer
    parameters  W0 b0 W1 b1 ... as float64
    first moments, same order, float64
    second moments, same order, float64
    CRC-32 u32 of every preceding byte

The JSON block carries the training config, dropout rate, optimizer step
and learning rate, and the best-epoch bookkeeping.
"""
from __future__ import annotations

import json
import struct
import zlib
from pathlib import Path

import numpy as np

from .errors import ChecksumError, CorruptFileError, MissingFileError, VersionError
from .regressor import RegressorParams
from .trainer import OptimizerState, TrainConfig, TrainedModel

MAGIC = b"VRAC"
VERSION = 1


def _shapes(n_layers, table):
    shapes = []
    for out_dim, in_dim in table:
        shapes += [(out_dim, in_dim), (out_dim,)]
    return shapes


def encode_checkpoint(model: TrainedModel) -> bytes:
    params = model.params
    meta = {
        "config": model.config.to_dict(),
        "dropout_rate": params.dropout_rate,
        "step": model.opt_state.t,
        "lr": model.opt_state.lr,
        "best_epoch": model.best_epoch,
        "best_val_rmse": model.best_val_rmse,
    }
    blob = json.dumps(meta, sort_keys=True).encode()
    parts = [MAGIC, struct.pack("<HI", VERSION, len(blob)), blob,
             struct.pack("<I", len(params.weights))]
    for w in params.weights:
        parts.append(struct.pack("<II", *w.shape))
    for group in (params.arrays(), model.opt_state.m, model.opt_state.v):
        for a in group:
            parts.append(np.ascontiguousarray(a, dtype="<f8").tobytes())
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body))


def decode_checkpoint(buf: bytes, name="<buffer>") -> TrainedModel:
    if len(buf) < 14 or buf[:4] != MAGIC:
        raise CorruptFileError(f"{name}: not a checkpoint file")
    (version,) = struct.unpack_from("<H", buf, 4)
    if version != VERSION:
        raise VersionError(f"{name}: unsupported checkpoint version {version}")
    body, (crc,) = buf[:-4], struct.unpack("<I", buf[-4:])
    if zlib.crc32(body) != crc:
        raise ChecksumError(f"{name}: CRC-32 mismatch")
    try:
        (blob_len,) = struct.unpack_from("<I", buf, 6)
        pos = 10
        meta = json.loads(buf[pos:pos + blob_len].decode())
        pos += blob_len
        (n_layers,) = struct.unpack_from("<I", buf, pos)
        pos += 4
        table = [struct.unpack_from("<II", buf, pos + 8 * i) for i in range(n_layers)]
        pos += 8 * n_layers
        shapes = _shapes(n_layers, table)
        groups = []
        for _ in range(3):
            arrays = []
            for shape in shapes:
                count = int(np.prod(shape))
                if pos + 8 * count > len(body):
                    raise CorruptFileError(f"{name}: array data truncated")
                arrays.append(np.frombuffer(buf, dtype="<f8", count=count, offset=pos)
                              .reshape(shape).astype(np.float64))
                pos += 8 * count
            groups.append(arrays)
        if pos != len(body):
            raise CorruptFileError(f"{name}: {len(body) - pos} unexpected trailing bytes")
        config = TrainConfig.from_dict(meta["config"])
    except (struct.error, ValueError, KeyError) as exc:
        raise CorruptFileError(f"{name}: malformed checkpoint ({exc})") from exc
    params = RegressorParams.from_arrays(groups[0], meta["dropout_rate"])
    state = OptimizerState(groups[1], groups[2], int(meta["step"]), float(meta["lr"]))
    return TrainedModel(params, state, config, int(meta["best_epoch"]), float(meta["best_val_rmse"]))


def save_checkpoint(model: TrainedModel, path):
    Path(path).write_bytes(encode_checkpoint(model))


def load_checkpoint(path) -> TrainedModel:
    path = Path(path)
    try:
        buf = path.read_bytes()
    except FileNotFoundError as exc:
        raise MissingFileError(f"checkpoint not found: {path}") from exc
    return decode_checkpoint(buf, str(path))

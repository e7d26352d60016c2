import pytest

from vra.checkpoint import decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint
from vra.errors import ChecksumError, CorruptFileError, VersionError
from vra.regressor import forward, init_params
from vra.trainer import OptimizerState, TrainConfig, TrainedModel


@pytest.fixture
def model(rng):
    cfg = TrainConfig(learning_rate=3e-4, hidden_dims=(9, 5), seed=17, max_epochs=12)
    p = init_params(12, cfg.hidden_dims, 0.1, seed=3)
    for b in p.biases:
        b[:] = rng.normal(size=b.shape)
    state = OptimizerState([rng.normal(size=a.shape) for a in p.arrays()],
                           [rng.random(a.shape) for a in p.arrays()], 37, 1.25e-4)
    return TrainedModel(p, state, cfg, best_epoch=4, best_val_rmse=0.3125)


def test_roundtrip_bit_exact(tmp_path, model):
    path = tmp_path / "m.vrac"
    save_checkpoint(model, path)
    got = load_checkpoint(path)
    for a, b in zip(model.params.arrays() + model.opt_state.m + model.opt_state.v,
                    got.params.arrays() + got.opt_state.m + got.opt_state.v):
        assert a.tobytes() == b.tobytes()
    assert got.config == model.config
    assert (got.opt_state.t, got.opt_state.lr) == (37, 1.25e-4)
    assert (got.best_epoch, got.best_val_rmse) == (4, 0.3125)
    assert got.params.dropout_rate == model.params.dropout_rate


def test_reloaded_forward_identical(model, rng):
    got = decode_checkpoint(encode_checkpoint(model))
    for _ in range(100):
        x = rng.normal(size=12)
        assert forward(got.params, x) == forward(model.params, x)


def test_version_byte(model):
    buf = bytearray(encode_checkpoint(model))
    buf[4] ^= 0xFF
    with pytest.raises(VersionError):
        decode_checkpoint(bytes(buf))


def test_checksum(model):
    buf = bytearray(encode_checkpoint(model))
    buf[len(buf) // 2] ^= 0x01
    with pytest.raises(ChecksumError):
        decode_checkpoint(bytes(buf))


def test_bad_magic_and_truncation(model):
    buf = encode_checkpoint(model)
    with pytest.raises(CorruptFileError):
        decode_checkpoint(b"XXXX" + buf[4:])
    with pytest.raises(CorruptFileError):
        decode_checkpoint(buf[:-9])

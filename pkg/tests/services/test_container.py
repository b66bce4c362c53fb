import json
import os
import struct
import sys
import zlib

import numpy as np
import pytest

sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..', '..')))
from app.core.exceptions import ChecksumError, FormatError
from app.models.config_models import ModelConfig
from app.services.container_service import (
    decode_container,
    encode_container,
    load_cache,
    load_weights,
    read_container,
    save_cache,
    save_weights,
    write_container,
)
from app.services.model_runtime import GenerationSession, init_random
from app.services.prefix_cache import decode_step

rng = np.random.default_rng(5)


def small_weights(**kwargs):
    cfg = ModelConfig(n_layers=2, heads=2, d=4, n_max=16, **kwargs)
    return init_random(cfg)


def test_weights_round_trip_bit_exact(tmp_path):
    weights = small_weights(vocab_size=7, memory_tokens=4)
    path = tmp_path / "w.spcw"
    save_weights(weights, path)
    loaded = load_weights(path)
    assert loaded.config == weights.config
    original = weights.tensors()
    restored = loaded.tensors()
    assert list(original) == list(restored)
    for name, arr in original.items():
        assert restored[name].dtype == arr.dtype
        assert np.array_equal(restored[name], arr), name
    save_weights(loaded, tmp_path / "again.spcw")
    assert (tmp_path / "again.spcw").read_bytes() == path.read_bytes()


def test_container_layout(tmp_path):
    path = tmp_path / "c.spcw"
    tensors = {"a": np.arange(6, dtype=np.float32).reshape(2, 3), "b": np.ones(2)}
    write_container(path, tensors, {"kind": "test"})
    blob = path.read_bytes()
    magic, version, header_len = struct.unpack_from("<4sIQ", blob, 0)
    assert magic == b"SPCW" and version == 1
    header = json.loads(blob[16 : 16 + header_len])
    assert header["tensors"][0] == {"name": "a", "dtype": "f32", "shape": [2, 3], "byte_offset": 0}
    assert header["tensors"][1]["byte_offset"] == 24
    payload = blob[16 + header_len : -4]
    assert struct.unpack("<I", blob[-4:])[0] == zlib.crc32(payload)
    back, metadata = read_container(path)
    assert metadata == {"kind": "test"}
    assert np.array_equal(back["a"], tensors["a"])


def test_truncated_file_rejected():
    blob = encode_container({"x": np.ones((4, 4))}, {})
    for cut in (3, 20, len(blob) - 9):
        with pytest.raises(FormatError):
            decode_container(blob[:cut])


def test_bad_magic_and_version():
    blob = bytearray(encode_container({"x": np.ones(3)}, {}))
    bad_magic = bytes(b"XXXX" + blob[4:])
    with pytest.raises(FormatError):
        decode_container(bad_magic)
    struct.pack_into("<I", blob, 4, 2)
    with pytest.raises(FormatError):
        decode_container(bytes(blob))


def raw_container(entries, payload):
    header = json.dumps({"metadata": {}, "tensors": entries}).encode()
    return (
        struct.pack("<4sIQ", b"SPCW", 1, len(header))
        + header
        + payload
        + struct.pack("<I", zlib.crc32(payload))
    )


def test_shape_mismatch_names_tensor():
    payload = np.ones(4, dtype=np.float64).tobytes()
    entry = {"name": "layers.0.w", "dtype": "f64", "shape": [3, 3], "byte_offset": 0}
    with pytest.raises(FormatError, match="layers.0.w"):
        decode_container(raw_container([entry], payload))


def test_malformed_header_entries_rejected():
    payload = np.ones(4, dtype=np.float64).tobytes()
    good = {"name": "w", "dtype": "f64", "shape": [4], "byte_offset": 0}
    decode_container(raw_container([good], payload))
    malformed = [
        [{k: v for k, v in good.items() if k != "byte_offset"}],
        [{k: v for k, v in good.items() if k != "shape"}],
        [dict(good, shape=["4"])],
        [dict(good, shape=[2.5])],
        [dict(good, shape=4)],
        [dict(good, shape=[-1, -4])],
        [dict(good, byte_offset="0")],
        ["w"],
        [None],
    ]
    for entries in malformed:
        with pytest.raises(FormatError):
            decode_container(raw_container(entries, payload))
    with pytest.raises(FormatError):
        decode_container(raw_container({"w": good}, payload))


def test_corrupted_payload_checksum():
    blob = bytearray(encode_container({"x": np.arange(8.0)}, {}))
    blob[-8] ^= 0xFF
    with pytest.raises(ChecksumError):
        decode_container(bytes(blob))


def test_missing_tensor_rejected(tmp_path):
    weights = small_weights()
    tensors = weights.tensors()
    tensors.pop("layers.1.ffn_w2")
    path = tmp_path / "partial.spcw"
    write_container(path, tensors, {"kind": "weights", "config": weights.config.dict()})
    with pytest.raises(FormatError, match="layers.1.ffn_w2"):
        load_weights(path)


def test_cache_round_trip(tmp_path):
    weights = small_weights(precision="f64")
    session = GenerationSession(weights)
    session.prefill(rng.standard_normal((5, 8)))
    for _ in range(20):
        session.step(rng.standard_normal(8))
    path = tmp_path / "cache.spcw"
    save_cache(session.states, path)
    restored = load_cache(path)

    assert len(restored) == 2 and len(restored[0]) == 2
    for row, restored_row in zip(session.states, restored):
        for state, back in zip(row, restored_row):
            assert back.t == state.t == 25
            for name in ("prefix_fft", "v_buf", "q_buf", "sum_q"):
                assert np.array_equal(getattr(back, name), getattr(state, name))

    save_cache(restored, tmp_path / "again.spcw")
    assert (tmp_path / "again.spcw").read_bytes() == path.read_bytes()

    layer_cfg = weights.config.layer_config()
    x = rng.standard_normal(4)
    head = weights.blocks[0].mixer.head(0)
    original_out = decode_step(session.states[0][0], x, head, layer_cfg)
    resumed_out = decode_step(restored[0][0], x, head, layer_cfg)
    assert np.array_equal(original_out, resumed_out)


def test_cache_counter_beyond_float_precision(tmp_path):
    session = GenerationSession(small_weights(precision="f64"))
    session.prefill(rng.standard_normal((3, 8)))
    big = (1 << 53) + 1
    session.states[0][0].t = big
    path = tmp_path / "cache.spcw"
    save_cache(session.states, path)
    tensors, _ = read_container(path)
    assert tensors["cache/0/0/t"].shape == (2,)
    assert load_cache(path)[0][0].t == big


def test_cache_names_reserved(tmp_path):
    session = GenerationSession(small_weights())
    session.prefill(rng.standard_normal((3, 8)).astype(np.float32))
    path = tmp_path / "cache.spcw"
    save_cache(session.states, path)
    tensors, metadata = read_container(path)
    assert metadata["kind"] == "cache"
    assert all(name.startswith("cache/") for name in tensors)
    assert tensors["cache/1/0/prefix_fft"].shape == (9, 4, 2)
    with pytest.raises(FormatError):
        load_weights(path)

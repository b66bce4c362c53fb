"""
Container Service
-----------------
Modul ini bertanggung jawab untuk:
1. Menulis/membaca container tensor little-endian `SPCW`
2. Menyimpan dan memuat ModelWeights
3. Snapshot CacheState (suspend/resume sesi) dengan nama `cache/...`

Layout: magic `SPCW` | u32 versi | u64 panjang header | header JSON |
payload row-major | u32 CRC32 payload.
"""

from pathlib import Path
from typing import Any, Dict, List, Tuple, Union
import json
import logging
import struct
import zlib

import numpy as np

from app.core.exceptions import ChecksumError, FormatError, StateError
from app.models.config_models import ModelConfig
from app.models.weights import BlockWeights, LayerWeights, ModelWeights
from app.services.prefix_cache import CacheState
from app.utils.spectral import twiddle_table

logger = logging.getLogger(__name__)

MAGIC = b"SPCW"
VERSION = 1
PREAMBLE = struct.Struct("<4sIQ")
CRC = struct.Struct("<I")

DTYPES = {"f32": np.dtype("<f4"), "f64": np.dtype("<f8")}

PathLike = Union[str, Path]


def _dtype_name(arr: np.ndarray) -> str:
    return "f32" if arr.dtype == np.float32 else "f64"


def _dim(value: Any) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValueError(f"dimensi bukan integer: {value!r}")
    return value


def _pack_counter(t: int) -> np.ndarray:
    """Counter u64 sebagai dua half u32 (lo, hi), eksak di f64."""
    t = int(t)
    if not 0 <= t < 1 << 64:
        raise StateError(f"Counter t di luar rentang u64: {t}")
    return np.array([t & 0xFFFFFFFF, t >> 32], dtype=np.float64)


def _unpack_counter(arr: np.ndarray, name: str) -> int:
    if arr.shape != (2,) or np.any(arr < 0) or np.any(arr > 0xFFFFFFFF) or np.any(arr != np.floor(arr)):
        raise FormatError(f"Tensor {name}: counter tidak valid")
    lo, hi = (int(v) for v in arr)
    return (hi << 32) | lo


def encode_container(tensors: Dict[str, np.ndarray], metadata: Dict[str, Any]) -> bytes:
    """
    Serialisasi tensor real ke bytes container.
    """
    entries, chunks = [], []
    offset = 0
    for name, arr in tensors.items():
        arr = np.asarray(arr)
        if np.iscomplexobj(arr):
            raise FormatError(f"Tensor {name} kompleks; simpan sebagai pasangan (re, im)")
        dtype_name = _dtype_name(arr)
        data = np.ascontiguousarray(arr, dtype=DTYPES[dtype_name]).tobytes()
        entries.append(
            {
                "name": name,
                "dtype": dtype_name,
                "shape": list(arr.shape),
                "byte_offset": offset,
            }
        )
        chunks.append(data)
        offset += len(data)
    header = json.dumps(
        {"metadata": metadata, "tensors": entries},
        sort_keys=True,
        separators=(",", ":"),
    ).encode("utf-8")
    payload = b"".join(chunks)
    return (
        PREAMBLE.pack(MAGIC, VERSION, len(header))
        + header
        + payload
        + CRC.pack(zlib.crc32(payload) & 0xFFFFFFFF)
    )


def decode_container(blob: bytes) -> Tuple[Dict[str, np.ndarray], Dict[str, Any]]:
    """
    Parse bytes container. Struktur divalidasi penuh sebelum tensor dibuat,
    sehingga file rusak tidak menghasilkan state parsial.

    Returns:
        Tuple (tensor per nama, metadata).
    """
    if len(blob) < PREAMBLE.size + CRC.size:
        raise FormatError("File terlalu pendek untuk container SPCW")
    magic, version, header_len = PREAMBLE.unpack_from(blob, 0)
    if magic != MAGIC:
        raise FormatError(f"Magic bytes tidak valid: {magic!r}")
    if version != VERSION:
        raise FormatError(f"Versi container tidak didukung: {version}")
    header_end = PREAMBLE.size + header_len
    if header_end + CRC.size > len(blob):
        raise FormatError("Header melewati akhir file (file terpotong)")
    try:
        header = json.loads(blob[PREAMBLE.size : header_end].decode("utf-8"))
        entries = header["tensors"]
        metadata = header.get("metadata", {})
    except (ValueError, KeyError, TypeError) as e:
        raise FormatError(f"Header JSON tidak valid: {e}")

    payload = blob[header_end : len(blob) - CRC.size]
    expected = 0
    layout = []
    if not isinstance(entries, list):
        raise FormatError("Header JSON tidak valid: 'tensors' harus berupa list")
    for entry in entries:
        if not isinstance(entry, dict):
            raise FormatError(f"Entri header tidak valid: {entry!r}")
        name = entry.get("name", "?")
        dtype = DTYPES.get(entry.get("dtype"))
        if dtype is None:
            raise FormatError(f"Tensor {name}: dtype tidak dikenal {entry.get('dtype')}")
        try:
            shape = tuple(_dim(s) for s in entry["shape"])
            offset = entry["byte_offset"]
        except (KeyError, TypeError, ValueError) as e:
            raise FormatError(f"Tensor {name}: entri header tidak valid ({e!r})")
        if any(s < 0 for s in shape):
            raise FormatError(f"Tensor {name}: dimensi negatif {list(shape)}")
        nbytes = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
        if offset != expected or expected + nbytes > len(payload):
            raise FormatError(
                f"Tensor {name}: shape {list(shape)} tidak cocok dengan panjang payload"
            )
        layout.append((name, dtype, shape, expected, nbytes))
        expected += nbytes
    if expected != len(payload):
        last = layout[-1][0] if layout else "<none>"
        raise FormatError(
            f"Tensor {last}: payload {len(payload)} byte, header menyatakan {expected}"
        )

    (stored_crc,) = CRC.unpack_from(blob, len(blob) - CRC.size)
    if zlib.crc32(payload) & 0xFFFFFFFF != stored_crc:
        raise ChecksumError("CRC32 payload tidak cocok")

    tensors = {
        name: np.frombuffer(payload, dtype=dtype, count=nbytes // dtype.itemsize, offset=start)
        .reshape(shape)
        .astype(dtype.newbyteorder("="))
        for name, dtype, shape, start, nbytes in layout
    }
    return tensors, metadata


def write_container(path: PathLike, tensors: Dict[str, np.ndarray], metadata: Dict[str, Any]) -> None:
    Path(path).write_bytes(encode_container(tensors, metadata))


def read_container(path: PathLike) -> Tuple[Dict[str, np.ndarray], Dict[str, Any]]:
    return decode_container(Path(path).read_bytes())


def save_weights(weights: ModelWeights, path: PathLike) -> None:
    """
    Simpan bobot model; konfigurasi disimpan di metadata header.
    """
    metadata = {"kind": "weights", "config": weights.config.dict()}
    write_container(path, weights.tensors(), metadata)
    logger.info(f"Weights saved to {path}")


def _take(tensors: Dict[str, np.ndarray], name: str) -> np.ndarray:
    if name not in tensors:
        raise FormatError(f"Tensor {name} tidak ada di container")
    return tensors[name]


def load_weights(path: PathLike) -> ModelWeights:
    """
    Muat bobot model dari container.

    Returns:
        ModelWeights dengan konfigurasi dari metadata.
    """
    tensors, metadata = read_container(path)
    if metadata.get("kind") != "weights":
        raise FormatError(f"Container {path} bukan file bobot")
    cfg = ModelConfig(**metadata["config"])
    weights = ModelWeights(config=cfg)
    if cfg.vocab_size:
        weights.embedding = _take(tensors, "embedding")
        weights.lm_head = _take(tensors, "lm_head")
    if cfg.memory_tokens:
        weights.memory_rows = _take(tensors, "memory_rows")

    layer_fields = [f for f in LayerWeights.__dataclass_fields__]
    block_fields = [f for f in BlockWeights.__dataclass_fields__ if f != "mixer"]
    optional = {"mem_gate_w", "mem_gate_b"}
    for i in range(cfg.n_layers):
        prefix = f"layers.{i}."
        mixer_kwargs = {}
        for name in layer_fields:
            key = f"{prefix}mixer.{name}"
            if name in optional and key not in tensors:
                continue
            mixer_kwargs[name] = _take(tensors, key)
        block_kwargs = {name: _take(tensors, prefix + name) for name in block_fields}
        weights.blocks.append(BlockWeights(mixer=LayerWeights(**mixer_kwargs), **block_kwargs))
    logger.info(f"Weights loaded from {path}: {len(tensors)} tensors")
    return weights


def cache_tensors(states: List[List[CacheState]]) -> Dict[str, np.ndarray]:
    """
    Tensor snapshot per (blok, head), urutan field: prefix_fft (re/im
    interleaved), V_buf, Q_buf, sum_q, t (half u32 lo, hi).
    """
    out: Dict[str, np.ndarray] = {}
    for b, row in enumerate(states):
        for h, state in enumerate(row):
            base = f"cache/{b}/{h}/"
            out[base + "prefix_fft"] = np.stack(
                [state.prefix_fft.real, state.prefix_fft.imag], axis=-1
            )
            out[base + "v_buf"] = state.v_buf
            out[base + "q_buf"] = state.q_buf
            out[base + "sum_q"] = state.sum_q
            out[base + "t"] = _pack_counter(state.t)
    return out


def save_cache(states: List[List[CacheState]], path: PathLike) -> None:
    """
    Simpan state cache. Memory bank tidak disimpan; pasang ulang setelah load.
    """
    first = states[0][0]
    metadata = {
        "kind": "cache",
        "layers": len(states),
        "heads": len(states[0]),
        "n_max": first.n_max,
        "d": first.d,
    }
    write_container(path, cache_tensors(states), metadata)
    logger.info(f"Cache snapshot saved to {path}")


def load_cache(path: PathLike) -> List[List[CacheState]]:
    tensors, metadata = read_container(path)
    if metadata.get("kind") != "cache":
        raise FormatError(f"Container {path} bukan snapshot cache")
    n_max, d = metadata["n_max"], metadata["d"]
    states = []
    for b in range(metadata["layers"]):
        row = []
        for h in range(metadata["heads"]):
            base = f"cache/{b}/{h}/"
            packed = _take(tensors, base + "prefix_fft")
            if packed.shape != (n_max // 2 + 1, d, 2):
                raise FormatError(f"Tensor {base}prefix_fft: shape {list(packed.shape)} tidak valid")
            prefix_fft = packed[..., 0] + 1j * packed[..., 1]
            row.append(
                CacheState(
                    n_max=n_max,
                    d=d,
                    prefix_fft=prefix_fft.astype(np.result_type(packed.dtype, np.complex64)),
                    v_buf=_take(tensors, base + "v_buf").copy(),
                    q_buf=_take(tensors, base + "q_buf").copy(),
                    sum_q=_take(tensors, base + "sum_q").copy(),
                    twiddles=twiddle_table(n_max),
                    t=_unpack_counter(_take(tensors, base + "t"), base + "t"),
                    initialized=True,
                )
            )
        states.append(row)
    logger.info(f"Cache snapshot loaded from {path}")
    return states

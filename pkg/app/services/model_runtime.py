"""
Model Runtime
-------------
Modul ini bertanggung jawab untuk:
1. Inisialisasi bobot acak yang deterministik dari seed
2. Forward blok pre-norm (embedding -> mixer -> FFN)
3. Baseline atensi softmax kuadratik (kausal) beserta KV cache-nya
4. Generasi streaming (prefill sekali, lalu decode per token) dengan TTFT/TPOT
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Union
import logging
import math
import time

import numpy as np

from app.core.exceptions import CapacityError, ShapeError
from app.models.bench_models import BenchReport
from app.models.config_models import (
    CACHED_KERNELS,
    LayerConfig,
    ModelConfig,
)
from app.models.weights import (
    BlockWeights,
    GATE_GROUP_FIELDS,
    HEAD_SPECTRE_FIELDS,
    LayerWeights,
    ModelWeights,
)
from app.services.prefix_cache import (
    CacheState,
    MemoryBank,
    attach_memory,
    decode_step,
    memory_precompute,
    prefill,
)
from app.services.spectre_layer import spectre_mix_forward, split_heads
from app.utils.nn_ops import causal_softmax, dense, gelu, layer_norm

logger = logging.getLogger(__name__)

# Logit controller awal: skip WRM ~90% untuk skor ~N(0, 1)
CONTROLLER_LOGIT_INIT = -1.28

ATTENTION_BLOCK_ROWS = 1024


def _normal(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    return rng.standard_normal(shape) / math.sqrt(fan_in)


def _init_layer(rng: np.random.Generator, cfg: ModelConfig) -> LayerWeights:
    H, d, dh = cfg.heads, cfg.d, cfg.d_hidden
    G = 1 if cfg.share_gates else H
    n_bins = cfg.n_max // 2 + 1
    taps = 2 * cfg.r + 1
    # Bias gate awal condong ke gate identitas (Re = 1, Im = 0)
    gate_b2 = np.zeros((G, 2 * n_bins))
    gate_b2[:, 0::2] = 1.0
    layer = LayerWeights(
        w_q=_normal(rng, (H, d, d), d),
        w_v=_normal(rng, (H, d, d), d),
        gate_w1=_normal(rng, (G, d, dh), d),
        gate_b1=np.zeros((G, dh)),
        gate_w2=_normal(rng, (G, dh, 2 * n_bins), dh),
        gate_b2=gate_b2,
        modrelu_bias=np.zeros((G, n_bins)),
        toeplitz_kernel=_normal(rng, (G, taps, 2), taps) * 0.1,
        wrm_w1=_normal(rng, (G, d, dh), d),
        wrm_b1=np.zeros((G, dh)),
        wrm_w2=_normal(rng, (G, dh, (cfg.wrm_levels + 1) * d), dh),
        wrm_b2=np.zeros((G, (cfg.wrm_levels + 1) * d)),
        controller_logit=np.full(G, CONTROLLER_LOGIT_INIT),
        ln_gain=np.ones((G, d)),
        ln_bias=np.zeros((G, d)),
        w_o=_normal(rng, (H * d, H * d), H * d),
    )
    if cfg.memory_tokens:
        mem_bins = cfg.memory_tokens // 2 + 1
        layer.mem_gate_w = _normal(rng, (G, dh, 2 * mem_bins), dh)
        layer.mem_gate_b = np.zeros((G, 2 * mem_bins))
    return layer


def _cast_tree(weights: ModelWeights, dtype) -> ModelWeights:
    def cast(obj):
        for name, value in vars(obj).items():
            if isinstance(value, np.ndarray):
                setattr(obj, name, value.astype(dtype))

    for block in weights.blocks:
        cast(block.mixer)
        cast(block)
    for name in ("embedding", "lm_head", "memory_rows"):
        value = getattr(weights, name)
        if value is not None:
            setattr(weights, name, value.astype(dtype))
    return weights


def init_random(cfg: ModelConfig) -> ModelWeights:
    """
    Bobot acak deterministik: numpy Generator (PCG64) dari seed, distribusi
    normal dengan skala 1/sqrt(fan_in). Seed sama -> bobot identik bit per bit.

    Args:
        cfg: Konfigurasi model yang sudah tervalidasi.

    Returns:
        ModelWeights.
    """
    rng = np.random.default_rng(cfg.seed)
    D, F = cfg.d_model, cfg.d_ffn
    weights = ModelWeights(config=cfg)
    if cfg.vocab_size:
        weights.embedding = _normal(rng, (cfg.vocab_size, D), D)
    for _ in range(cfg.n_layers):
        weights.blocks.append(
            BlockWeights(
                mixer=_init_layer(rng, cfg),
                ln1_gain=np.ones(D),
                ln1_bias=np.zeros(D),
                ln2_gain=np.ones(D),
                ln2_bias=np.zeros(D),
                ffn_w1=_normal(rng, (D, F), D),
                ffn_b1=np.zeros(F),
                ffn_w2=_normal(rng, (F, D), F),
                ffn_b2=np.zeros(D),
            )
        )
    if cfg.vocab_size:
        weights.lm_head = _normal(rng, (D, cfg.vocab_size), D)
    if cfg.memory_tokens:
        weights.memory_rows = _normal(rng, (cfg.memory_tokens, cfg.d), cfg.d)
    logger.info(
        f"Initialized random weights: layers={cfg.n_layers}, heads={cfg.heads}, "
        f"d={cfg.d}, N_max={cfg.n_max}, seed={cfg.seed}"
    )
    return _cast_tree(weights, cfg.dtype)


def parameter_tally(weights: ModelWeights) -> Dict[str, Union[int, float]]:
    """
    Hitung parameter dari bentuk tensor.

    Returns:
        total: semua parameter model.
        spectre_total: semua parameter grup gate (gate MLP, modReLU, Toeplitz,
            WRM, controller, LN descriptor, ekstensi gate memori) di semua layer.
        spectre_per_head: {gate_mlp + modrelu_bias + toeplitz + wrm_mlp} satu head.
        ratio: spectre_per_head / total.
        spectre_total_ratio: spectre_total / total.
    """
    total = sum(int(arr.size) for arr in weights.tensors().values())
    spectre_total = 0
    for block in weights.blocks:
        mixer = block.mixer
        group_fields = GATE_GROUP_FIELDS + ("mem_gate_w", "mem_gate_b")
        for name in group_fields:
            arr = getattr(mixer, name)
            if arr is not None:
                spectre_total += int(arr.size)
    first = weights.blocks[0].mixer
    spectre_per_head = sum(
        int(getattr(first, name)[0].size) for name in HEAD_SPECTRE_FIELDS
    )
    return {
        "total": total,
        "spectre_total": spectre_total,
        "spectre_per_head": spectre_per_head,
        "ratio": spectre_per_head / total,
        "spectre_total_ratio": spectre_total / total,
    }


def ffn_forward(X: np.ndarray, block: BlockWeights) -> np.ndarray:
    return dense(gelu(dense(X, block.ffn_w1, block.ffn_b1)), block.ffn_w2, block.ffn_b2)


def naive_attention_forward(
    X: np.ndarray, w: LayerWeights, cfg: LayerConfig
) -> np.ndarray:
    """
    Baseline O(n^2 d): softmax(Q K^T / sqrt(d)) V per head dengan mask kausal.
    Key diambil dari proyeksi query (K = Q). Diproses per blok baris query
    agar memori skor tetap O(blok * n).

    Args:
        X: Matriks token n x (H*d).
        w: Bobot layer (W_q, W_v, W_o dipakai).
        cfg: Konfigurasi layer.

    Returns:
        Matriks n x (H*d).
    """
    X = np.asarray(X, dtype=cfg.dtype)
    n = X.shape[0]
    scale = 1.0 / math.sqrt(cfg.d)
    outputs = []
    for h, X_h in enumerate(split_heads(X, cfg.heads, cfg.d)):
        Q = X_h @ w.w_q[h]
        V = X_h @ w.w_v[h]
        out = np.empty_like(V)
        for start in range(0, n, ATTENTION_BLOCK_ROWS):
            stop = min(start + ATTENTION_BLOCK_ROWS, n)
            scores = (Q[start:stop] @ Q[:stop].T) * scale
            out[start:stop] = causal_softmax(scores, offset=start) @ V[:stop]
        outputs.append(out)
    return np.concatenate(outputs, axis=-1) @ w.w_o


def block_forward(
    X: np.ndarray,
    block: BlockWeights,
    cfg: ModelConfig,
    kernel: str = "spectre",
) -> np.ndarray:
    """
    Blok pre-norm residual: H = X + Mix(LN(X)); keluaran H + FFN(LN(H)).
    """
    X = np.asarray(X, dtype=cfg.dtype)
    if X.ndim != 2 or X.shape[1] != cfg.d_model:
        raise ShapeError(f"Input blok harus n x {cfg.d_model}, diperoleh {X.shape}")
    layer_cfg = cfg.layer_config()
    normed = layer_norm(X, block.ln1_gain, block.ln1_bias)
    if kernel == "naive-attention":
        mixed = naive_attention_forward(normed, block.mixer, layer_cfg)
    else:
        mixed = spectre_mix_forward(normed, block.mixer, layer_cfg)
    hidden = X + mixed
    return hidden + ffn_forward(layer_norm(hidden, block.ln2_gain, block.ln2_bias), block)


def kernel_config(cfg: ModelConfig, kernel: str) -> ModelConfig:
    """Varian ablation: spectre-no-lr mematikan Toeplitz, spectre-no-wrm mematikan WRM."""
    if kernel == "spectre-no-lr":
        return ModelConfig(**{**cfg.dict(), "toeplitz_enabled": False})
    if kernel == "spectre-no-wrm":
        return ModelConfig(**{**cfg.dict(), "wrm_enabled": False})
    return cfg


def model_forward(
    weights: ModelWeights,
    X: np.ndarray,
    cfg: Optional[ModelConfig] = None,
    kernel: str = "spectre",
) -> np.ndarray:
    """Forward seluruh tumpukan blok (mode paralel)."""
    cfg = kernel_config(cfg or weights.config, kernel)
    if kernel in CACHED_KERNELS and X.shape[0] > cfg.n_max:
        raise CapacityError(f"Sekuens {X.shape[0]} melebihi N_max={cfg.n_max}")
    hidden = np.asarray(X, dtype=cfg.dtype)
    for block in weights.blocks:
        hidden = block_forward(hidden, block, cfg, kernel)
    return hidden


@dataclass
class KVCache:
    """KV cache untuk baseline atensi; key = query (proyeksi W_q)."""

    keys: np.ndarray  # (H, capacity, d)
    values: np.ndarray
    length: int = 0

    @property
    def nbytes(self) -> int:
        return self.keys[:, : self.length].nbytes + self.values[:, : self.length].nbytes


class GenerationSession:
    """
    Satu stream generasi; memiliki state per (blok, head) secara eksklusif.
    """

    def __init__(
        self,
        weights: ModelWeights,
        cfg: Optional[ModelConfig] = None,
        kernel: str = "spectre",
        capacity: int = 0,
    ):
        self.weights = weights
        self.kernel = kernel
        self.cfg = kernel_config(cfg or weights.config, kernel)
        self.layer_cfg = self.cfg.layer_config()
        self.capacity = capacity
        self.states: List[List[CacheState]] = []
        self.kv: List[KVCache] = []
        self.banks: List[List[MemoryBank]] = []
        if kernel in CACHED_KERNELS and weights.memory_rows is not None:
            for block in weights.blocks:
                mixer = block.mixer
                self.banks.append(
                    [
                        memory_precompute(
                            weights.memory_rows,
                            self.cfg.n_max,
                            mixer.head(h).mem_gate_w,
                            mixer.head(h).mem_gate_b,
                        )
                        for h in range(self.cfg.heads)
                    ]
                )

    @property
    def state_bytes(self) -> int:
        if self.kernel in CACHED_KERNELS:
            return sum(state.nbytes for row in self.states for state in row)
        return sum(cache.nbytes for cache in self.kv)

    def _mixer_prefill(self, b: int, normed: np.ndarray) -> np.ndarray:
        block = self.weights.blocks[b]
        cfg = self.layer_cfg
        if self.kernel in CACHED_KERNELS:
            row_states, outputs = [], []
            for h, X_h in enumerate(split_heads(normed, cfg.heads, cfg.d)):
                state, out = prefill(X_h, block.mixer.head(h), cfg)
                if self.banks:
                    attach_memory(state, self.banks[b][h])
                row_states.append(state)
                outputs.append(out)
            self.states.append(row_states)
            return np.concatenate(outputs, axis=-1) @ block.mixer.w_o

        n = normed.shape[0]
        capacity = max(self.capacity, n)
        cache = KVCache(
            keys=np.zeros((cfg.heads, capacity, cfg.d), dtype=cfg.dtype),
            values=np.zeros((cfg.heads, capacity, cfg.d), dtype=cfg.dtype),
            length=n,
        )
        for h, X_h in enumerate(split_heads(normed, cfg.heads, cfg.d)):
            cache.keys[h, :n] = X_h @ block.mixer.w_q[h]
            cache.values[h, :n] = X_h @ block.mixer.w_v[h]
        self.kv.append(cache)
        if n == 0:
            return np.zeros((0, cfg.heads * cfg.d), dtype=cfg.dtype)
        return naive_attention_forward(normed, block.mixer, cfg)

    def _mixer_step(self, b: int, normed: np.ndarray):
        block = self.weights.blocks[b]
        cfg = self.layer_cfg
        if self.kernel in CACHED_KERNELS:
            windows = [
                decode_step(self.states[b][h], x_h, block.mixer.head(h), cfg)
                for h, x_h in enumerate(split_heads(normed, cfg.heads, cfg.d))
            ]
            window = np.concatenate(windows, axis=-1) @ block.mixer.w_o
            return window[-1], window

        cache = self.kv[b]
        if cache.length >= cache.keys.shape[1]:
            grow = max(cache.keys.shape[1], 1)
            cache.keys = np.concatenate([cache.keys, np.zeros_like(cache.keys[:, :grow])], axis=1)
            cache.values = np.concatenate(
                [cache.values, np.zeros_like(cache.values[:, :grow])], axis=1
            )
        pos = cache.length
        outputs = []
        for h, x_h in enumerate(split_heads(normed, cfg.heads, cfg.d)):
            q = x_h @ block.mixer.w_q[h]
            cache.keys[h, pos] = q
            cache.values[h, pos] = x_h @ block.mixer.w_v[h]
            scores = (cache.keys[h, : pos + 1] @ q) / math.sqrt(cfg.d)
            probs = np.exp(scores - scores.max())
            outputs.append((probs / probs.sum()) @ cache.values[h, : pos + 1])
        cache.length = pos + 1
        row = np.concatenate(outputs) @ block.mixer.w_o
        return row, row[None, :]

    def prefill(self, X: np.ndarray) -> np.ndarray:
        """Jalankan prompt L x d_model melalui semua blok dan isi cache."""
        cfg = self.cfg
        X = np.asarray(X, dtype=cfg.dtype).reshape(-1, cfg.d_model)
        if self.kernel in CACHED_KERNELS and X.shape[0] > cfg.n_max:
            raise CapacityError(f"Prompt {X.shape[0]} token melebihi N_max={cfg.n_max}")
        self.states, self.kv = [], []
        hidden = X
        for b, block in enumerate(self.weights.blocks):
            normed = layer_norm(hidden, block.ln1_gain, block.ln1_bias)
            hidden = hidden + self._mixer_prefill(b, normed)
            hidden = hidden + ffn_forward(
                layer_norm(hidden, block.ln2_gain, block.ln2_bias), block
            )
        return hidden

    def step(self, x: np.ndarray):
        """
        Satu token melalui semua blok.

        Returns:
            Tuple (baris keluaran d_model, window live blok terakhir).
        """
        cfg = self.cfg
        hidden = np.asarray(x, dtype=cfg.dtype).reshape(cfg.d_model)
        window = None
        for b, block in enumerate(self.weights.blocks):
            normed = layer_norm(hidden, block.ln1_gain, block.ln1_bias)
            mixed, window = self._mixer_step(b, normed)
            hidden = hidden + mixed
            hidden = hidden + ffn_forward(
                layer_norm(hidden, block.ln2_gain, block.ln2_bias), block
            )
        return hidden, window


@dataclass
class GenerationResult:
    prefill_output: np.ndarray
    rows: np.ndarray
    window_lengths: List[int]
    step_ms: List[float]
    report: BenchReport
    windows: List[np.ndarray] = field(default_factory=list)
    tokens: List[int] = field(default_factory=list)


def _embed_prompt(weights: ModelWeights, prompt, cfg: ModelConfig) -> np.ndarray:
    if cfg.vocab_size:
        ids = np.asarray(prompt, dtype=np.int64).reshape(-1)
        if ids.size and (ids.min() < 0 or ids.max() >= cfg.vocab_size):
            raise ShapeError("Token id di luar vocab")
        return weights.embedding[ids]
    X = np.asarray(prompt, dtype=cfg.dtype)
    if X.size == 0:
        return np.zeros((0, cfg.d_model), dtype=cfg.dtype)
    if X.ndim != 2 or X.shape[1] != cfg.d_model:
        raise ShapeError(f"Prompt harus L x {cfg.d_model}, diperoleh {X.shape}")
    return X


def stream_generate(
    weights: ModelWeights,
    prompt: Union[np.ndarray, Sequence[int]],
    steps: int,
    cfg: Optional[ModelConfig] = None,
    kernel: str = "spectre",
    keep_windows: bool = False,
) -> GenerationResult:
    """
    Prefill sekali lalu `steps` langkah decode. Mode raw-embedding memakai
    baris terakhir keluaran sebagai input berikutnya; mode vocab memakai
    argmax dari linear head.

    Args:
        weights: Bobot model.
        prompt: Matriks L x d_model (raw) atau daftar token id (vocab).
        steps: Jumlah token yang dihasilkan.
        cfg: Konfigurasi (default: weights.config).
        kernel: spectre, spectre-no-lr, spectre-no-wrm, atau naive-attention.
        keep_windows: Simpan window live tiap langkah.

    Returns:
        GenerationResult berisi keluaran, panjang window, dan BenchReport.
    """
    cfg = cfg or weights.config
    X = _embed_prompt(weights, prompt, cfg)
    L = X.shape[0]
    if kernel in CACHED_KERNELS and L > cfg.n_max:
        raise CapacityError(f"Prompt {L} token melebihi N_max={cfg.n_max}")

    session = GenerationSession(weights, cfg, kernel, capacity=L + steps)
    start = time.perf_counter()
    prefill_output = session.prefill(X)
    ttft_ms = (time.perf_counter() - start) * 1000.0
    peak_bytes = session.state_bytes

    def next_input(row: np.ndarray):
        if cfg.vocab_size:
            token = int(np.argmax(row @ weights.lm_head))
            return weights.embedding[token], token
        return row, None

    last = prefill_output[-1] if L else np.zeros(cfg.d_model, dtype=cfg.dtype)
    x, token = next_input(last)
    rows, lengths, step_ms, windows, tokens = [], [], [], [], []
    for _ in range(steps):
        if token is not None:
            tokens.append(token)
        t0 = time.perf_counter()
        row, window = session.step(x)
        step_ms.append((time.perf_counter() - t0) * 1000.0)
        rows.append(row)
        lengths.append(window.shape[0])
        if keep_windows:
            windows.append(window)
        peak_bytes = max(peak_bytes, session.state_bytes)
        x, token = next_input(row)

    decode_ms = float(sum(step_ms))
    tpot_ms = decode_ms / steps if steps else None
    if steps:
        throughput = steps / (decode_ms / 1000.0) if decode_ms > 0 else 0.0
    else:
        throughput = L / (ttft_ms / 1000.0) if ttft_ms > 0 and L else 0.0
    report = BenchReport(
        ttft_ms=ttft_ms,
        tpot_ms=tpot_ms,
        throughput_tok_per_s=throughput,
        seq_len=L,
        kernel_name=kernel,
        peak_state_bytes=peak_bytes,
        generated_tokens=steps,
        decode_ms=decode_ms,
    )
    logger.info(
        f"Generated {steps} tokens with {kernel}: TTFT={ttft_ms:.3f} ms, "
        f"TPOT={'n/a' if tpot_ms is None else f'{tpot_ms:.3f} ms'}"
    )
    rows_arr = (
        np.stack(rows) if rows else np.zeros((0, cfg.d_model), dtype=cfg.dtype)
    )
    return GenerationResult(
        prefill_output=prefill_output,
        rows=rows_arr,
        window_lengths=lengths,
        step_ms=step_ms,
        report=report,
        windows=windows,
        tokens=tokens,
    )

"""
Prefix-FFT Cache
----------------
Modul ini bertanggung jawab untuk:
1. Pre-fill: satu RFFT ber-padding N_max atas prompt
2. Decode: update evict-and-insert per token pada semua bin frekuensi
3. Ring buffer V/Q dan running sum descriptor
4. Persistent memory bank (spektrum dihitung sekali, tidak pernah di-evict)

Satu CacheState hanya boleh ditulis oleh satu pemanggil dalam satu waktu.
"""

from dataclasses import dataclass, field
from typing import Optional, Tuple
import logging

import numpy as np

from app.core.exceptions import CapacityError, ConfigError, ShapeError, StateError
from app.models.config_models import LayerConfig
from app.models.weights import HeadWeights
from app.services.spectre_layer import (
    apply_gate,
    apply_positional_phase,
    assemble_complex,
    gate_from_descriptor,
    gate_hidden,
    mix_projected,
    project_qv,
)
from app.utils.nn_ops import dense, layer_norm
from app.utils.spectral import (
    HalfSpectrum,
    TwiddleTable,
    irfft,
    is_power_of_two,
    rfft,
    twiddle_table,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MemoryBank:
    """
    N_mem baris memori persisten beserta half-spectrum-nya.
    """

    rows: np.ndarray
    spectrum: HalfSpectrum
    gate_w: Optional[np.ndarray] = None
    gate_b: Optional[np.ndarray] = None

    @property
    def n_mem(self) -> int:
        return self.rows.shape[0]

    @property
    def nbytes(self) -> int:
        return self.rows.nbytes + self.spectrum.coeffs.nbytes

    def gate(self, hidden: np.ndarray) -> np.ndarray:
        """Gate segmen memori dari aktivasi hidden MLP gate; identitas jika tidak ada ekstensi."""
        if self.gate_w is None:
            return np.ones(self.spectrum.n_bins, dtype=self.spectrum.coeffs.dtype)
        return assemble_complex(dense(hidden, self.gate_w, self.gate_b))

    def segment_output(self, g_mem: np.ndarray) -> np.ndarray:
        """iRFFT panjang N_mem dari diag(g_mem) * M_hat."""
        return irfft(apply_gate(self.spectrum, g_mem))


@dataclass
class CacheState:
    """
    State Prefix-FFT per head.
    """

    n_max: int
    d: int
    prefix_fft: np.ndarray
    v_buf: np.ndarray
    q_buf: np.ndarray
    sum_q: np.ndarray
    twiddles: TwiddleTable
    t: int = 0
    initialized: bool = False
    memory: Optional[MemoryBank] = field(default=None, repr=False)

    @classmethod
    def allocate(cls, n_max: int, d: int, dtype=np.float64) -> "CacheState":
        """State kosong (belum di-prefill)."""
        if not is_power_of_two(n_max) or n_max < 2:
            raise ConfigError(f"N_max harus pangkat dua, diperoleh {n_max}")
        complex_dtype = np.result_type(dtype, np.complex64)
        return cls(
            n_max=n_max,
            d=d,
            prefix_fft=np.zeros((n_max // 2 + 1, d), dtype=complex_dtype),
            v_buf=np.zeros((n_max, d), dtype=dtype),
            q_buf=np.zeros((n_max, d), dtype=dtype),
            sum_q=np.zeros(d, dtype=dtype),
            twiddles=twiddle_table(n_max),
        )

    @property
    def live_length(self) -> int:
        return min(self.t, self.n_max)

    @property
    def spectrum(self) -> HalfSpectrum:
        return HalfSpectrum(coeffs=self.prefix_fft, n_fft=self.n_max)

    def scalar_count(self) -> int:
        """(N_max/2+1)*d*2 + 2*N_max*d + d skalar, tanpa twiddle."""
        return (
            self.prefix_fft.size * 2
            + self.v_buf.size
            + self.q_buf.size
            + self.sum_q.size
        )

    @property
    def nbytes(self) -> int:
        total = (
            self.prefix_fft.nbytes
            + self.v_buf.nbytes
            + self.q_buf.nbytes
            + self.sum_q.nbytes
        )
        if self.memory is not None:
            total += self.memory.nbytes
        return total


def prefill(
    X: np.ndarray, w: HeadWeights, cfg: LayerConfig
) -> Tuple[CacheState, np.ndarray]:
    """
    Pre-fill: prefix_fft = RFFT(pad(V, N_max)), isi ring buffer dan sum_q.

    Args:
        X: Prompt L x d untuk satu head, L <= N_max.
        w: Bobot head.
        cfg: Konfigurasi layer (n_fft dipakai sebagai N_max).

    Returns:
        Tuple (state, keluaran mixing paralel L x d untuk prompt).
    """
    X = np.asarray(X, dtype=cfg.dtype)
    if X.ndim != 2 or X.shape[1] != cfg.d:
        raise ShapeError(f"Prompt harus berdimensi (L, {cfg.d}), diterima {X.shape}")
    L = X.shape[0]
    n_max = cfg.n_fft
    if L > n_max:
        raise CapacityError(f"Prompt {L} token melebihi N_max={n_max}")

    state = CacheState.allocate(n_max, cfg.d, cfg.dtype)
    output = np.zeros((0, cfg.d), dtype=cfg.dtype)
    if L:
        Q, V = project_qv(X, w)
        state.prefix_fft[:] = rfft(V, n_max).coeffs
        state.v_buf[:L] = V
        state.q_buf[:L] = Q
        state.sum_q[:] = Q.sum(axis=0)
        output = mix_projected(Q, V, w, cfg)
    state.t = L
    state.initialized = True
    logger.debug(f"Prefill done: L={L}, N_max={n_max}, d={cfg.d}")
    return state, output


def evict_update_bin(
    prefix_fft_k: np.ndarray,
    v_old: np.ndarray,
    v_new: np.ndarray,
    t: int,
    k: int,
    n_max: int,
) -> np.ndarray:
    """
    Update satu bin: kurangi kontribusi token yang keluar window (fase
    t - N_max) lalu tambahkan token baru (fase t).
    """
    if not 0 <= k <= n_max // 2:
        raise ShapeError(f"Bin k={k} di luar 0..{n_max // 2}")
    evict_phase = np.exp(-2j * np.pi * k * (t - n_max) / n_max)
    insert_phase = np.exp(-2j * np.pi * k * t / n_max)
    evicted = np.asarray(v_old) * evict_phase if t >= n_max else 0
    return prefix_fft_k - evicted + np.asarray(v_new) * insert_phase


def evict_update(
    state: CacheState, v_old: np.ndarray, v_new: np.ndarray, t: int
) -> None:
    """
    Update semua bin sekaligus. exp(-j2pi k(t-N)/N) == exp(-j2pi k t/N), jadi
    eviksi dan insersi memakai kolom twiddle yang sama.
    """
    column = state.twiddles.column(t).astype(state.prefix_fft.dtype, copy=False)
    state.prefix_fft += column[:, None] * (v_new - v_old)[None, :]


def decode_step(
    state: CacheState, x_t: np.ndarray, w: HeadWeights, cfg: LayerConfig
) -> np.ndarray:
    """
    Satu langkah decode.

    Args:
        state: State hasil prefill (dimutasi di tempat).
        x_t: Token baru, vektor d.
        w: Bobot head.
        cfg: Konfigurasi layer.

    Returns:
        L' = min(t+1, N_max) baris terakhir dari iRFFT(diag(g) prefix_fft);
        jika memory bank terpasang, keluaran segmen memori (N_mem baris)
        diletakkan di depannya.
    """
    if not state.initialized:
        raise StateError("CacheState belum diinisialisasi oleh prefill")

    x_t = np.asarray(x_t, dtype=state.v_buf.dtype).reshape(1, -1)
    q_rows, v_rows = project_qv(x_t, w)
    q_t, v_t = q_rows[0], v_rows[0]

    n = state.n_max
    t = state.t
    slot = t % n
    if t >= n:
        v_old = state.v_buf[slot].copy()
        q_old = state.q_buf[slot].copy()
    else:
        v_old = np.zeros_like(v_t)
        q_old = np.zeros_like(q_t)

    # (a) evict & update
    evict_update(state, v_old, v_t, t)

    # (b) ring buffer & descriptor
    state.v_buf[slot] = v_t
    state.q_buf[slot] = q_t
    state.sum_q += q_t - q_old

    # (c) gate dari descriptor, (d) fase posisi
    q_bar = layer_norm(state.sum_q / n, w.ln_gain, w.ln_bias)
    hidden = gate_hidden(q_bar, w)
    g = gate_from_descriptor(q_bar, w, cfg, hidden=hidden)
    g = apply_positional_phase(g, t, n)

    # (e) inverse RFFT dan live context
    mixed = irfft(apply_gate(state.spectrum, g))
    live = min(t + 1, n)
    window = mixed[n - live :]
    if state.memory is not None:
        mem_out = state.memory.segment_output(state.memory.gate(hidden))
        window = np.concatenate([mem_out.astype(window.dtype, copy=False), window])

    state.t = t + 1
    return window


def memory_precompute(
    M: np.ndarray,
    n_max: Optional[int] = None,
    gate_w: Optional[np.ndarray] = None,
    gate_b: Optional[np.ndarray] = None,
) -> MemoryBank:
    """
    Hitung RFFT memori sekali: M_hat = RFFT(M, N_mem).

    Args:
        M: Baris memori N_mem x d, N_mem pangkat dua.
        n_max: Window cache; jika diberikan, N_mem <= N_max/4 dicek.
        gate_w, gate_b: Dense layer ekstensi gate (hidden -> 2*(N_mem/2+1)).

    Returns:
        MemoryBank immutable.
    """
    rows = np.array(M, copy=True)
    n_mem = rows.shape[0]
    if not is_power_of_two(n_mem) or n_mem < 2:
        raise ConfigError(f"N_mem harus pangkat dua >= 2, diperoleh {n_mem}")
    if n_max is not None and n_mem > n_max // 4:
        raise ConfigError(f"N_mem={n_mem} melebihi N_max/4={n_max // 4}")
    if gate_w is not None and gate_w.shape[-1] != 2 * (n_mem // 2 + 1):
        raise ShapeError(
            f"Ekstensi gate memori menghasilkan {gate_w.shape[-1]} nilai, "
            f"seharusnya {2 * (n_mem // 2 + 1)}"
        )
    spectrum = rfft(rows, n_mem)
    rows.flags.writeable = False
    spectrum.coeffs.flags.writeable = False
    return MemoryBank(rows=rows, spectrum=spectrum, gate_w=gate_w, gate_b=gate_b)


def attach_memory(state: CacheState, bank: MemoryBank) -> CacheState:
    """
    Pasang memory bank ke state setelah prefill. Update sliding window tetap
    hanya menyentuh segmen prompt.
    """
    if not state.initialized:
        raise StateError("attach_memory harus dipanggil setelah prefill")
    if state.memory is not None:
        raise StateError("Memory bank sudah terpasang")
    if bank.rows.shape[1] != state.d:
        raise ShapeError(
            f"Dimensi memori {bank.rows.shape[1]} tidak sama dengan d={state.d}"
        )
    if bank.n_mem > state.n_max // 4:
        raise ConfigError(f"N_mem={bank.n_mem} melebihi N_max/4={state.n_max // 4}")
    state.memory = bank
    return state

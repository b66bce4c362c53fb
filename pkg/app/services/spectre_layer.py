"""
SPECTRE Layer
-------------
Modul ini bertanggung jawab untuk:
1. Proyeksi token ke query/value
2. Pipeline gate spektral (descriptor -> MLP -> Toeplitz -> modReLU -> fase posisi)
3. Mixing frekuensi per head dan proyeksi keluaran W_o
4. Wavelet Refinement Module (WRM)
"""

from typing import Optional, Tuple
import logging

import numpy as np
from scipy import signal

from app.core.exceptions import ShapeError
from app.models.config_models import LayerConfig
from app.models.weights import HeadWeights, LayerWeights
from app.utils.nn_ops import dense, gelu, layer_norm
from app.utils.spectral import HalfSpectrum, irfft, mod_relu, rfft
from app.utils.wavelet import WaveletCoeffs, band_sizes, dwt_haar, idwt_haar

logger = logging.getLogger(__name__)


def project_qv(X: np.ndarray, w: HeadWeights) -> Tuple[np.ndarray, np.ndarray]:
    """
    Token projection: Q = X W_q, V = X W_v.
    """
    X = np.asarray(X)
    if X.shape[-1] != w.w_q.shape[0]:
        raise ShapeError(
            f"Dimensi token {X.shape[-1]} tidak cocok dengan W_q {w.w_q.shape}"
        )
    return X @ w.w_q, X @ w.w_v


def global_descriptor(Q: np.ndarray, w: HeadWeights) -> np.ndarray:
    """
    q_bar = LN(rata-rata baris Q).
    """
    return layer_norm(Q.mean(axis=0), w.ln_gain, w.ln_bias)


def gate_hidden(q_bar: np.ndarray, w: HeadWeights) -> np.ndarray:
    return gelu(dense(q_bar, w.gate_w1, w.gate_b1))


def assemble_complex(raw: np.ndarray) -> np.ndarray:
    """Keluaran MLP interleaved (Re g_0, Im g_0, Re g_1, ...) menjadi vektor kompleks."""
    return raw[0::2] + 1j * raw[1::2]


def toeplitz_update(g: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """
    g + (t * g): konvolusi 1-D sepanjang sumbu frekuensi, kernel panjang 2r+1
    terpusat, zero padding di luar bin 0..N/2.
    """
    return g + signal.convolve(g, kernel, mode="same", method="direct")


def gate_from_descriptor(
    q_bar: np.ndarray,
    w: HeadWeights,
    cfg: LayerConfig,
    hidden: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    Pipeline gate: MLP dua layer -> (opsional) update Toeplitz -> modReLU.

    Args:
        q_bar: Descriptor global panjang d.
        w: Bobot head.
        cfg: Konfigurasi layer.
        hidden: Aktivasi hidden MLP yang sudah dihitung (opsional).

    Returns:
        Gate kompleks panjang N_fft/2+1.
    """
    if hidden is None:
        hidden = gate_hidden(q_bar, w)
    g = assemble_complex(dense(hidden, w.gate_w2, w.gate_b2))
    if g.shape[0] != cfg.n_bins:
        raise ShapeError(f"Gate punya {g.shape[0]} bin, seharusnya {cfg.n_bins}")
    if cfg.toeplitz_enabled:
        g = toeplitz_update(g, w.toeplitz_kernel.astype(g.dtype, copy=False))
    return mod_relu(g, w.modrelu_bias)


def apply_positional_phase(g: np.ndarray, p: int, n: int) -> np.ndarray:
    """
    g_k <- g_k * exp(j 2 pi k p / n).
    """
    k = np.arange(g.shape[0], dtype=np.int64)
    phase = np.exp(2j * np.pi * ((k * (int(p) % n)) % n) / n)
    return g * phase.astype(g.dtype, copy=False)


def apply_gate(spectrum: HalfSpectrum, g: np.ndarray) -> HalfSpectrum:
    """
    diag(g) * spektrum, broadcast ke semua channel.
    """
    if g.shape[0] != spectrum.n_bins:
        raise ShapeError(
            f"Gate punya {g.shape[0]} bin, spektrum punya {spectrum.n_bins}"
        )
    gate = g if spectrum.coeffs.ndim == 1 else g[:, None]
    return HalfSpectrum(coeffs=spectrum.coeffs * gate, n_fft=spectrum.n_fft)


def wrm_controller(q_bar: np.ndarray, w: HeadWeights, cfg: LayerConfig) -> bool:
    """
    Controller skip WRM. Mode learned-stub memakai bobot unit hidden pertama
    dari MLP WRM ditambah logit bias.
    """
    if cfg.wrm_controller_mode == "always":
        return True
    if cfg.wrm_controller_mode == "never":
        return False
    score = float(np.dot(q_bar, w.wrm_w1[:, 0])) + w.controller_logit
    return score > 0


def wrm_gains(q_bar: np.ndarray, w: HeadWeights, cfg: LayerConfig) -> np.ndarray:
    """Gain per level per channel, bentuk (J+1, d)."""
    hidden = gelu(dense(q_bar, w.wrm_w1, w.wrm_b1))
    return dense(hidden, w.wrm_w2, w.wrm_b2).reshape(cfg.wrm_levels + 1, -1)


def wrm_forward(
    V_tilde: np.ndarray, q_bar: np.ndarray, w: HeadWeights, cfg: LayerConfig
) -> np.ndarray:
    """
    Wavelet Refinement Module: V_out = V_tilde + iDWT(s * DWT(V_tilde)).

    Args:
        V_tilde: Keluaran mixing n x d, n habis dibagi 2^J.
        q_bar: Descriptor global.
        w: Bobot head.
        cfg: Konfigurasi layer.

    Returns:
        Matriks n x d; V_tilde tanpa perubahan jika controller memilih skip.
    """
    if not wrm_controller(q_bar, w, cfg):
        return V_tilde
    n = V_tilde.shape[0]
    coeffs = dwt_haar(V_tilde, cfg.wrm_levels)
    gains = wrm_gains(q_bar, w, cfg).astype(V_tilde.dtype, copy=False)
    scale = np.repeat(gains, band_sizes(n, cfg.wrm_levels), axis=0)
    refined = idwt_haar(WaveletCoeffs(coeffs.coeffs * scale, cfg.wrm_levels))
    return V_tilde + refined


def mix_projected(
    Q: np.ndarray, V: np.ndarray, w: HeadWeights, cfg: LayerConfig
) -> np.ndarray:
    """
    Langkah 2-4 untuk satu head dari Q, V yang sudah diproyeksikan: RFFT
    ber-padding N_fft, gate dari descriptor, iRFFT, WRM pada window penuh,
    lalu ambil n baris pertama.
    """
    n = V.shape[0]
    spectrum = rfft(V, cfg.n_fft)
    q_bar = global_descriptor(Q, w)
    g = gate_from_descriptor(q_bar, w, cfg)
    mixed = irfft(apply_gate(spectrum, g))
    if cfg.wrm_enabled:
        mixed = wrm_forward(mixed, q_bar, w, cfg)
    return mixed[:n]


def mix_head(X: np.ndarray, w: HeadWeights, cfg: LayerConfig) -> np.ndarray:
    Q, V = project_qv(X, w)
    return mix_projected(Q, V, w, cfg)


def split_heads(X: np.ndarray, heads: int, d: int):
    if X.shape[-1] != heads * d:
        raise ShapeError(
            f"Lebar token {X.shape[-1]} tidak sama dengan H*d = {heads * d}"
        )
    return [X[..., h * d : (h + 1) * d] for h in range(heads)]


def spectre_mix_forward(
    X: np.ndarray, w: LayerWeights, cfg: LayerConfig
) -> np.ndarray:
    """
    SPECTRE mixing layer (mode paralel): tiap head memproses irisan d kolom
    miliknya, hasil digabung lalu dikalikan W_o. Fase posisi tidak diterapkan.

    Args:
        X: Matriks token n x (H*d), n <= N_fft.
        w: Bobot layer.
        cfg: Konfigurasi layer.

    Returns:
        Matriks n x (H*d).
    """
    X = np.asarray(X, dtype=cfg.dtype)
    outputs = [
        mix_head(X_h, w.head(h), cfg)
        for h, X_h in enumerate(split_heads(X, cfg.heads, cfg.d))
    ]
    return np.concatenate(outputs, axis=-1) @ w.w_o

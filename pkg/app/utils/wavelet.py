"""
Wavelet Utilities
-----------------
Modul ini berisi DWT/iDWT Haar orthonormal sepanjang sumbu sekuens.

Layout koefisien: [approx_J | detail_J | detail_{J-1} | ... | detail_1].
"""

from dataclasses import dataclass
from typing import List
import math

import numpy as np

from app.core.exceptions import ConfigError, ShapeError

INV_SQRT2 = 1.0 / math.sqrt(2.0)


@dataclass(frozen=True)
class WaveletCoeffs:
    coeffs: np.ndarray
    levels: int


def _check_layout(n: int, levels: int) -> None:
    if levels < 1:
        raise ConfigError(f"Level wavelet harus >= 1, diperoleh {levels}")
    if n % (1 << levels) != 0:
        raise ShapeError(
            f"Panjang sekuens {n} tidak habis dibagi 2^{levels}"
        )


def band_sizes(n: int, levels: int) -> List[int]:
    """
    Ukuran tiap band sesuai layout: approx_J, detail_J, ..., detail_1.
    """
    _check_layout(n, levels)
    coarsest = n >> levels
    return [coarsest] + [n >> level for level in range(levels, 0, -1)]


def dwt_haar(values: np.ndarray, levels: int) -> WaveletCoeffs:
    """
    Analisis Haar orthonormal, rekursif pada band approximation.

    Args:
        values: Matriks n x d (atau sekuens 1-D).
        levels: Jumlah level J.

    Returns:
        WaveletCoeffs dengan total n baris.
    """
    arr = np.asarray(values)
    if not np.issubdtype(arr.dtype, np.floating):
        arr = arr.astype(np.float64)
    n = arr.shape[0]
    _check_layout(n, levels)

    out = np.empty_like(arr)
    approx = arr
    end = n
    for _ in range(levels):
        even, odd = approx[0::2], approx[1::2]
        half = end // 2
        out[half:end] = (even - odd) * INV_SQRT2
        approx = (even + odd) * INV_SQRT2
        end = half
    out[:end] = approx
    return WaveletCoeffs(coeffs=out, levels=levels)


def idwt_haar(wavelet: WaveletCoeffs) -> np.ndarray:
    """
    Sintesis Haar; kebalikan eksak dari dwt_haar.
    """
    coeffs = np.asarray(wavelet.coeffs)
    n = coeffs.shape[0]
    _check_layout(n, wavelet.levels)

    size = n >> wavelet.levels
    approx = coeffs[:size]
    for _ in range(wavelet.levels):
        detail = coeffs[size : 2 * size]
        rec = np.empty((2 * size,) + coeffs.shape[1:], dtype=coeffs.dtype)
        rec[0::2] = (approx + detail) * INV_SQRT2
        rec[1::2] = (approx - detail) * INV_SQRT2
        approx = rec
        size *= 2
    return approx

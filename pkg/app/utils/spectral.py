"""
Spectral Utilities
------------------
Modul ini berisi primitif spektral real-valued:
1. RFFT / iRFFT pada representasi half-spectrum
2. Naive DFT (oracle O(N^2))
3. modReLU
4. Tabel twiddle factor
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Tuple, Union
import logging

import numpy as np
from scipy import fft as sp_fft

from app.core.exceptions import ConfigError, InputError, ShapeError

logger = logging.getLogger(__name__)

ArrayLike = Union[np.ndarray, list, tuple]


def is_power_of_two(n: int) -> bool:
    return isinstance(n, (int, np.integer)) and n >= 1 and (int(n) & (int(n) - 1)) == 0


def next_power_of_two(n: int) -> int:
    """Pangkat dua terkecil yang >= n."""
    n = max(int(n), 1)
    return 1 << (n - 1).bit_length()


def check_fft_length(n_fft: int) -> int:
    if not is_power_of_two(n_fft) or n_fft < 2:
        raise ConfigError(f"Panjang FFT harus pangkat dua >= 2, diperoleh {n_fft}")
    return int(n_fft)


def _as_real(x: ArrayLike) -> np.ndarray:
    arr = np.asarray(x)
    if not np.issubdtype(arr.dtype, np.floating):
        arr = arr.astype(np.float64)
    if not np.all(np.isfinite(arr)):
        raise InputError("Input mengandung NaN atau Inf")
    return arr


@dataclass(frozen=True)
class HalfSpectrum:
    """
    Koefisien RFFT non-redundan: (n_fft/2+1) baris, satu kolom per channel.
    """

    coeffs: np.ndarray
    n_fft: int

    @property
    def n_bins(self) -> int:
        return self.coeffs.shape[0]

    @property
    def d(self) -> int:
        return 1 if self.coeffs.ndim == 1 else self.coeffs.shape[1]


def rfft(x: ArrayLike, n_fft: int, workers: Optional[int] = None) -> HalfSpectrum:
    """
    RFFT sepanjang sumbu sekuens (axis 0) dengan zero-padding ke n_fft.

    Args:
        x: Sekuens real panjang N (1-D) atau matriks token n x d.
        n_fft: Panjang FFT, harus pangkat dua dan >= panjang input.
        workers: Jumlah thread scipy.fft (default: 1).

    Returns:
        HalfSpectrum dengan n_fft/2+1 baris.
    """
    n_fft = check_fft_length(n_fft)
    arr = _as_real(x)
    if arr.shape[0] > n_fft:
        raise ShapeError(
            f"Panjang input {arr.shape[0]} melebihi n_fft={n_fft}"
        )
    coeffs = sp_fft.rfft(arr, n=n_fft, axis=0, workers=workers)
    return HalfSpectrum(coeffs=coeffs, n_fft=n_fft)


def irfft(spectrum: HalfSpectrum, workers: Optional[int] = None) -> np.ndarray:
    """
    Inverse RFFT; bagian imajiner bin DC dan Nyquist diabaikan.

    Args:
        spectrum: HalfSpectrum yang valid.

    Returns:
        Matriks real dengan n_fft baris.
    """
    expected = spectrum.n_fft // 2 + 1
    if spectrum.n_bins != expected:
        raise ShapeError(
            f"Half spectrum punya {spectrum.n_bins} baris, seharusnya {expected} "
            f"untuk n_fft={spectrum.n_fft}"
        )
    return sp_fft.irfft(spectrum.coeffs, n=spectrum.n_fft, axis=0, workers=workers)


def naive_dft(x: ArrayLike) -> np.ndarray:
    """
    DFT penuh lewat penjumlahan langsung O(N^2), selalu dalam float64.

    Args:
        x: Sekuens real panjang N (atau matriks N x d).

    Returns:
        Spektrum penuh N (x d) complex128.
    """
    arr = _as_real(x).astype(np.float64)
    n = arr.shape[0]
    k = np.arange(n)
    # Indeks (k*t) mod N menjaga fase tetap eksak untuk k*t besar
    kernel = np.exp(-2j * np.pi * (np.outer(k, k) % n) / n)
    return kernel @ arr


def hermitian_extend(spectrum: HalfSpectrum) -> np.ndarray:
    """
    Rekonstruksi spektrum penuh dari half spectrum: X_{N-k} = conj(X_k).
    """
    n = spectrum.n_fft
    full = np.empty((n,) + spectrum.coeffs.shape[1:], dtype=np.complex128)
    full[: n // 2 + 1] = spectrum.coeffs
    full[n // 2 + 1 :] = np.conj(spectrum.coeffs[1 : n // 2][::-1])
    return full


def spectral_energy(spectrum: HalfSpectrum) -> float:
    """
    Energi (Parseval) dari half spectrum: bobot 1/2 untuk DC dan Nyquist,
    bobot 1 untuk bin interior, diskalakan 2/N. Sama dengan ||x||^2.
    """
    power = np.abs(spectrum.coeffs) ** 2
    weights = np.ones(spectrum.n_bins)
    weights[0] = 0.5
    weights[-1] = 0.5
    if power.ndim > 1:
        power = power.sum(axis=tuple(range(1, power.ndim)))
    return float(2.0 / spectrum.n_fft * np.dot(weights, power))


def mod_relu(z: ArrayLike, b: ArrayLike) -> np.ndarray:
    """
    modReLU(z) = ReLU(|z| + b) * z / |z|, bernilai 0 untuk z = 0.

    Args:
        z: Bilangan kompleks (skalar atau array).
        b: Bias real, broadcast terhadap z.

    Returns:
        Array kompleks dengan bentuk z.
    """
    z = np.asarray(z)
    if not np.iscomplexobj(z):
        z = z.astype(np.complex128)
    magnitude = np.abs(z)
    scale = np.maximum(magnitude + np.asarray(b, dtype=magnitude.dtype), 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(magnitude > 0, z * (scale / magnitude), 0).astype(z.dtype)
    return out[()] if out.ndim == 0 else out


class TwiddleTable:
    """
    Tabel twiddle factor exp(-j 2 pi k t / N) untuk k = 0..N/2.

    Hanya akar satuan ke-N yang disimpan (O(N) memori); entri (k, t) dibaca
    lewat indeks (k*t) mod N sehingga periodik terhadap t dengan periode N.
    """

    def __init__(self, n: int, roots: Optional[np.ndarray] = None):
        self.n = check_fft_length(n)
        if roots is None:
            roots = np.exp(-2j * np.pi * np.arange(self.n) / self.n)
        roots = np.array(roots, dtype=np.complex128)
        if roots.shape != (self.n,):
            raise ShapeError(f"Akar twiddle harus panjang {self.n}")
        roots.flags.writeable = False
        self._roots = roots
        self._bins = np.arange(self.n // 2 + 1, dtype=np.int64)

    @property
    def n_bins(self) -> int:
        return self.n // 2 + 1

    @property
    def roots(self) -> np.ndarray:
        return self._roots

    @property
    def nbytes(self) -> int:
        return self._roots.nbytes

    def __getitem__(self, index: Tuple[int, int]) -> complex:
        k, t = index
        return complex(self._roots[(int(k) * int(t)) % self.n])

    def column(self, t: int) -> np.ndarray:
        """Vektor exp(-j 2 pi k t / N) untuk semua bin k."""
        return self._roots[(self._bins * (int(t) % self.n)) % self.n]

    @property
    def factors(self) -> np.ndarray:
        """Tabel penuh (N/2+1) x N; hanya untuk N kecil."""
        t = np.arange(self.n, dtype=np.int64)
        return self._roots[np.outer(self._bins, t) % self.n]

    def perturbed(self, index: int, angle: float) -> "TwiddleTable":
        """Salinan dengan satu akar diputar; hook untuk kontrol negatif."""
        roots = self._roots.copy()
        roots[index % self.n] *= np.exp(1j * angle)
        return TwiddleTable(self.n, roots)


@lru_cache(maxsize=32)
def twiddle_table(n: int) -> TwiddleTable:
    """
    Tabel twiddle yang di-cache dan dibagi antar state (immutable).
    """
    table = TwiddleTable(n)
    logger.debug(f"Twiddle table built for N={n}")
    return table

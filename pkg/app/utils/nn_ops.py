"""
NN Operations
-------------
Operasi jaringan dasar (dense, GELU, LayerNorm, softmax) di atas numpy/scipy.
"""

import math

import numpy as np
from scipy import special

LN_EPS = 1e-5


def dense(x: np.ndarray, weight: np.ndarray, bias: np.ndarray) -> np.ndarray:
    return x @ weight + bias


def gelu(x: np.ndarray) -> np.ndarray:
    return 0.5 * x * (1.0 + special.erf(x / math.sqrt(2.0)))


def layer_norm(
    x: np.ndarray, gain: np.ndarray, bias: np.ndarray, eps: float = LN_EPS
) -> np.ndarray:
    """
    LayerNorm sepanjang sumbu terakhir. Vektor konstan menjadi bias.
    """
    mean = x.mean(axis=-1, keepdims=True)
    var = ((x - mean) ** 2).mean(axis=-1, keepdims=True)
    return (x - mean) / np.sqrt(var + eps) * gain + bias


def causal_softmax(scores: np.ndarray, offset: int = 0) -> np.ndarray:
    """
    Softmax baris dengan mask kausal; baris i boleh melihat kolom <= i + offset.
    """
    rows, cols = scores.shape
    mask = np.arange(cols)[None, :] > (np.arange(rows)[:, None] + offset)
    masked = np.where(mask, -np.inf, scores)
    return special.softmax(masked, axis=-1)

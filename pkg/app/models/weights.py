"""
Weight models untuk SPECTRE.
Berisi definisi bobot per head, per layer, per blok, dan seluruh model.

Semua tensor disimpan real (f32/f64); kernel Toeplitz kompleks disimpan
sebagai (..., 2) dengan pasangan (re, im).
"""

from dataclasses import dataclass, field, fields
from typing import Dict, List, Optional

import numpy as np

from app.models.config_models import ModelConfig

# Parameter gate yang dihitung sebagai parameter tambahan SPECTRE per head
HEAD_SPECTRE_FIELDS = (
    "gate_w1",
    "gate_b1",
    "gate_w2",
    "gate_b2",
    "modrelu_bias",
    "toeplitz_kernel",
    "wrm_w1",
    "wrm_b1",
    "wrm_w2",
    "wrm_b2",
)

# Parameter grup gate: dibagi antar head jika share_gates aktif
GATE_GROUP_FIELDS = HEAD_SPECTRE_FIELDS + (
    "controller_logit",
    "ln_gain",
    "ln_bias",
)


@dataclass
class HeadWeights:
    """
    View bobot untuk satu head mixing.
    """

    w_q: np.ndarray
    w_v: np.ndarray
    gate_w1: np.ndarray
    gate_b1: np.ndarray
    gate_w2: np.ndarray
    gate_b2: np.ndarray
    modrelu_bias: np.ndarray
    toeplitz_kernel: np.ndarray  # complex, panjang 2r+1
    wrm_w1: np.ndarray
    wrm_b1: np.ndarray
    wrm_w2: np.ndarray
    wrm_b2: np.ndarray
    controller_logit: float
    ln_gain: np.ndarray
    ln_bias: np.ndarray
    mem_gate_w: Optional[np.ndarray] = None
    mem_gate_b: Optional[np.ndarray] = None

    @property
    def d(self) -> int:
        return self.w_q.shape[0]


@dataclass
class LayerWeights:
    """
    Bobot mixer satu layer. w_q/w_v berdimensi (H, d, d); parameter grup gate
    berdimensi (G, ...) dengan G = 1 jika gate dibagi, selain itu G = H.
    """

    w_q: np.ndarray
    w_v: np.ndarray
    gate_w1: np.ndarray
    gate_b1: np.ndarray
    gate_w2: np.ndarray
    gate_b2: np.ndarray
    modrelu_bias: np.ndarray
    toeplitz_kernel: np.ndarray
    wrm_w1: np.ndarray
    wrm_b1: np.ndarray
    wrm_w2: np.ndarray
    wrm_b2: np.ndarray
    controller_logit: np.ndarray
    ln_gain: np.ndarray
    ln_bias: np.ndarray
    w_o: np.ndarray
    mem_gate_w: Optional[np.ndarray] = None
    mem_gate_b: Optional[np.ndarray] = None

    @property
    def heads(self) -> int:
        return self.w_q.shape[0]

    @property
    def gate_groups(self) -> int:
        return self.gate_w1.shape[0]

    def head(self, h: int) -> HeadWeights:
        g = 0 if self.gate_groups == 1 else h
        kernel = self.toeplitz_kernel[g]
        return HeadWeights(
            w_q=self.w_q[h],
            w_v=self.w_v[h],
            gate_w1=self.gate_w1[g],
            gate_b1=self.gate_b1[g],
            gate_w2=self.gate_w2[g],
            gate_b2=self.gate_b2[g],
            modrelu_bias=self.modrelu_bias[g],
            toeplitz_kernel=kernel[..., 0] + 1j * kernel[..., 1],
            wrm_w1=self.wrm_w1[g],
            wrm_b1=self.wrm_b1[g],
            wrm_w2=self.wrm_w2[g],
            wrm_b2=self.wrm_b2[g],
            controller_logit=float(self.controller_logit[g]),
            ln_gain=self.ln_gain[g],
            ln_bias=self.ln_bias[g],
            mem_gate_w=None if self.mem_gate_w is None else self.mem_gate_w[g],
            mem_gate_b=None if self.mem_gate_b is None else self.mem_gate_b[g],
        )

    def tensors(self) -> Dict[str, np.ndarray]:
        return {
            f.name: getattr(self, f.name)
            for f in fields(self)
            if getattr(self, f.name) is not None
        }


@dataclass
class BlockWeights:
    """
    Satu blok pre-norm: mixer SPECTRE + FFN.
    """

    mixer: LayerWeights
    ln1_gain: np.ndarray
    ln1_bias: np.ndarray
    ln2_gain: np.ndarray
    ln2_bias: np.ndarray
    ffn_w1: np.ndarray
    ffn_b1: np.ndarray
    ffn_w2: np.ndarray
    ffn_b2: np.ndarray

    def tensors(self) -> Dict[str, np.ndarray]:
        out = {f"mixer.{name}": arr for name, arr in self.mixer.tensors().items()}
        for f in fields(self):
            if f.name != "mixer":
                out[f.name] = getattr(self, f.name)
        return out


@dataclass
class ModelWeights:
    config: ModelConfig
    blocks: List[BlockWeights] = field(default_factory=list)
    embedding: Optional[np.ndarray] = None
    lm_head: Optional[np.ndarray] = None
    memory_rows: Optional[np.ndarray] = None

    def tensors(self) -> Dict[str, np.ndarray]:
        """
        Semua tensor dalam urutan deterministik, dengan nama berhirarki.
        """
        out: Dict[str, np.ndarray] = {}
        if self.embedding is not None:
            out["embedding"] = self.embedding
        for i, block in enumerate(self.blocks):
            for name, arr in block.tensors().items():
                out[f"layers.{i}.{name}"] = arr
        if self.lm_head is not None:
            out["lm_head"] = self.lm_head
        if self.memory_rows is not None:
            out["memory_rows"] = self.memory_rows
        return out

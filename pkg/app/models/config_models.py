"""
Config models untuk layer, model, sweep, dan verifikasi SPECTRE.
"""

from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel, Field, root_validator, validator

from app.core.exceptions import ConfigError
from app.utils.spectral import is_power_of_two

Precision = Literal["f32", "f64"]
ControllerMode = Literal["always", "never", "learned-stub"]
Kernel = Literal["spectre", "spectre-no-lr", "spectre-no-wrm", "naive-attention"]

KERNELS = ("spectre", "spectre-no-lr", "spectre-no-wrm", "naive-attention")
CACHED_KERNELS = ("spectre", "spectre-no-lr", "spectre-no-wrm")


def precision_dtype(precision: str) -> type:
    return np.float32 if precision == "f32" else np.float64


class LayerConfig(BaseModel):
    """
    Konfigurasi satu layer SPECTRE (semua head).
    """

    d: int = Field(32, description="Dimensi per head", ge=1)
    heads: int = Field(1, description="Jumlah head H", ge=1)
    n_fft: int = Field(512, description="Panjang FFT (pangkat dua)")
    d_hidden: int = Field(32, description="Lebar hidden MLP gate dan WRM", ge=1)
    r: int = Field(2, description="Half-bandwidth kernel Toeplitz", ge=0)
    toeplitz_enabled: bool = Field(True, description="Aktifkan update Toeplitz")
    wrm_enabled: bool = Field(True, description="Aktifkan Wavelet Refinement Module")
    wrm_levels: int = Field(2, description="Jumlah level DWT J", ge=1)
    wrm_controller_mode: ControllerMode = Field(
        "learned-stub", description="Mode controller skip WRM"
    )
    share_gates: bool = Field(
        False, description="Parameter gate dibagi antar head dalam satu layer"
    )
    precision: Precision = Field("f64", description="Presisi numerik")

    class Config:
        allow_mutation = False

    @validator("n_fft")
    def _n_fft_power_of_two(cls, value):
        if not is_power_of_two(value) or value < 2:
            raise ConfigError(f"n_fft harus pangkat dua >= 2, diperoleh {value}")
        return value

    @root_validator(skip_on_failure=True)
    def _wrm_divides(cls, values):
        if values["wrm_enabled"] and values["n_fft"] % (1 << values["wrm_levels"]):
            raise ConfigError(
                f"n_fft={values['n_fft']} harus habis dibagi 2^{values['wrm_levels']}"
            )
        return values

    @property
    def n_bins(self) -> int:
        return self.n_fft // 2 + 1

    @property
    def dtype(self) -> type:
        return precision_dtype(self.precision)

    @property
    def gate_groups(self) -> int:
        return 1 if self.share_gates else self.heads


class ModelConfig(BaseModel):
    """
    Konfigurasi tumpukan blok SPECTRE.
    """

    n_layers: int = Field(4, description="Jumlah blok", ge=1)
    heads: int = Field(4, description="Jumlah head H", ge=1)
    d: int = Field(32, description="Dimensi per head", ge=1)
    d_ffn: Optional[int] = Field(
        None, description="Lebar FFN (default 4 * d_model)", ge=1
    )
    n_max: int = Field(512, description="Window N_max (pangkat dua)")
    vocab_size: int = Field(0, description="0 = mode raw-embedding", ge=0)
    memory_tokens: int = Field(0, description="N_mem, 0 = memory bank nonaktif", ge=0)
    d_hidden: int = Field(32, description="Lebar hidden MLP gate dan WRM", ge=1)
    r: int = Field(2, description="Half-bandwidth kernel Toeplitz", ge=0)
    toeplitz_enabled: bool = True
    wrm_enabled: bool = True
    wrm_levels: int = Field(2, ge=1)
    wrm_controller_mode: ControllerMode = "learned-stub"
    share_gates: bool = False
    precision: Precision = "f32"
    seed: int = Field(42, description="Seed PRNG untuk inisialisasi bobot")

    class Config:
        allow_mutation = False

    @validator("n_max")
    def _n_max_power_of_two(cls, value):
        if not is_power_of_two(value) or value < 2:
            raise ConfigError(f"n_max harus pangkat dua >= 2, diperoleh {value}")
        return value

    @root_validator(skip_on_failure=True)
    def _cross_field(cls, values):
        if values.get("d_ffn") is None:
            values["d_ffn"] = 4 * values["heads"] * values["d"]
        n_max = values["n_max"]
        if values["wrm_enabled"] and n_max % (1 << values["wrm_levels"]):
            raise ConfigError(
                f"n_max={n_max} harus habis dibagi 2^{values['wrm_levels']}"
            )
        n_mem = values["memory_tokens"]
        if n_mem:
            if not is_power_of_two(n_mem) or n_mem < 2:
                raise ConfigError(f"memory_tokens harus pangkat dua, diperoleh {n_mem}")
            if n_mem > n_max // 4:
                raise ConfigError(
                    f"memory_tokens={n_mem} melebihi N_max/4={n_max // 4}"
                )
        return values

    @property
    def d_model(self) -> int:
        return self.heads * self.d

    @property
    def dtype(self) -> type:
        return precision_dtype(self.precision)

    def layer_config(self) -> LayerConfig:
        return LayerConfig(
            d=self.d,
            heads=self.heads,
            n_fft=self.n_max,
            d_hidden=self.d_hidden,
            r=self.r,
            toeplitz_enabled=self.toeplitz_enabled,
            wrm_enabled=self.wrm_enabled,
            wrm_levels=self.wrm_levels,
            wrm_controller_mode=self.wrm_controller_mode,
            share_gates=self.share_gates,
            precision=self.precision,
        )


class SweepSpec(BaseModel):
    """
    Spesifikasi sweep latency/throughput terhadap panjang sekuens.
    """

    lengths: List[int] = Field(
        default_factory=lambda: [512, 1024, 4096, 8192, 32768],
        description="Panjang sekuens, naik tegas",
    )
    kernels: List[Kernel] = Field(
        default_factory=lambda: ["spectre", "naive-attention"],
        description="Subset dari spectre, spectre-no-lr, spectre-no-wrm, naive-attention",
    )
    repeats: int = Field(5, description="Jumlah pengulangan (median)", ge=3)
    warmup: int = Field(1, description="Iterasi warmup yang dibuang", ge=1)
    decode_steps: int = Field(256, description="Jumlah langkah decode", ge=0)
    parallel: bool = Field(False, description="Paralelkan sel (kernel, L)")

    @validator("lengths")
    def _strictly_increasing(cls, value):
        if not value:
            raise ConfigError("lengths tidak boleh kosong")
        if any(length < 1 for length in value):
            raise ConfigError("lengths harus positif")
        if any(b <= a for a, b in zip(value, value[1:])):
            raise ConfigError(f"lengths harus naik tegas: {value}")
        return value

    @validator("kernels")
    def _non_empty(cls, value):
        if not value:
            raise ConfigError("kernels tidak boleh kosong")
        return value


class VerifyConfig(BaseModel):
    """
    Parameter suite oracle (perintah verify).
    """

    n_max: int = Field(256, description="Window N_max untuk cek cache")
    d: int = Field(16, description="Dimensi per head", ge=1)
    precision: Precision = Field("f32", description="Presisi jalur produksi")
    seed: int = 42
    prompt_len: int = Field(17, ge=1)
    decode_steps: int = Field(10000, ge=0)

    @validator("n_max")
    def _n_max_power_of_two(cls, value):
        if not is_power_of_two(value) or value < 8:
            raise ConfigError(f"n_max harus pangkat dua >= 8, diperoleh {value}")
        return value

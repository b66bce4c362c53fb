"""
Bench models untuk hasil benchmark, verifikasi, dan request/response HTTP.
"""

from typing import Dict, List, Optional

from pydantic import BaseModel, Field

from app.models.config_models import Kernel, ModelConfig, SweepSpec


class BenchReport(BaseModel):
    """
    Model untuk hasil satu stream generasi.
    """

    ttft_ms: float = Field(..., description="Time to first token (wall time prefill)", ge=0)
    tpot_ms: Optional[float] = Field(
        None, description="Rata-rata waktu per langkah decode (None jika steps=0)", ge=0
    )
    throughput_tok_per_s: float = Field(..., description="Token per detik", ge=0)
    seq_len: int = Field(..., description="Panjang prompt", ge=0)
    kernel_name: str = Field(..., description="Kernel mixing yang dipakai")
    peak_state_bytes: int = Field(..., description="Ukuran state puncak (byte)", ge=0)
    generated_tokens: int = Field(0, description="Jumlah token yang dihasilkan", ge=0)
    decode_ms: float = Field(0.0, description="Total wall time decode", ge=0)


class SweepRow(BaseModel):
    """
    Model untuk satu sel sweep (kernel, L).
    """

    kernel: str
    seq_len: int = Field(..., description="Panjang sekuens L", ge=1)
    median_latency_ms: float = Field(..., ge=0)
    throughput_tok_per_s: float = Field(..., ge=0)
    ttft_ms: float = Field(..., ge=0)
    tpot_ms: Optional[float] = Field(None, ge=0)
    bytes_state: int = Field(..., ge=0)


class SlopeFit(BaseModel):
    """
    Hasil fitting log(latency) terhadap log(L).
    """

    kernel: str
    alpha: float = Field(..., description="Eksponen hasil fitting")
    intercept: float
    residual: float = Field(..., description="RMS residual di ruang log")
    points: int


class VerifyCheck(BaseModel):
    name: str
    passed: bool
    max_error: float
    tolerance: float
    detail: str = ""


class VerifyReport(BaseModel):
    passed: bool
    checks: List[VerifyCheck]


class TpotFlatness(BaseModel):
    n_max: int
    early_ms: float = Field(..., description="Median TPOT langkah [0, N_max/4]")
    late_ms: float = Field(..., description="Median TPOT langkah [N_max, 2*N_max]")
    ratio: float
    passed: bool


class SweepRequest(BaseModel):
    """
    Model untuk input sweep lewat HTTP.
    """

    spec: SweepSpec = Field(default_factory=SweepSpec)
    model: ModelConfig = Field(default_factory=lambda: ModelConfig(n_layers=2, n_max=32768))
    csv_path: Optional[str] = Field(None, description="Path file CSV keluaran (opsional)")


class SweepResult(BaseModel):
    status: str
    rows: List[SweepRow]
    exponents: Dict[str, SlopeFit]
    csv_path: Optional[str] = None


class TpotRequest(BaseModel):
    model: ModelConfig = Field(
        default_factory=lambda: ModelConfig(n_layers=1, heads=1, n_max=4096)
    )


class InitWeightsInput(BaseModel):
    """
    Model untuk input pembuatan bobot acak.
    """

    config: ModelConfig = Field(default_factory=ModelConfig)
    path: str = Field(..., description="Path file container .spcw tujuan")


class InitWeightsResult(BaseModel):
    status: str
    path: str
    parameters: Dict[str, float]


class GenerateInput(BaseModel):
    """
    Model untuk input generasi streaming dari file bobot.
    """

    weights_path: str = Field(..., description="Path file container .spcw")
    prompt_len: int = Field(16, description="Panjang prompt acak", ge=0)
    steps: int = Field(32, description="Jumlah token yang dihasilkan", ge=0)
    kernel: Kernel = "spectre"
    seed: int = 42

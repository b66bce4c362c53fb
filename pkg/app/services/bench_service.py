"""
Bench Service
-------------
Modul ini bertanggung jawab untuk:
1. Sweep latency/throughput per (kernel, L) dengan median atas pengulangan
2. Pengukuran TTFT/TPOT lewat stream_generate
3. Pengukuran kerataan TPOT pada steady state
4. Inisialisasi bobot acak dan generasi dari file bobot
"""

from concurrent.futures import ThreadPoolExecutor
from functools import partial
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union
import asyncio
import logging

import numpy as np

from app.core.config import settings
from app.core.exceptions import CapacityError, ConfigError
from app.models.bench_models import BenchReport, SweepRow, TpotFlatness
from app.models.config_models import CACHED_KERNELS, ModelConfig, SweepSpec
from app.models.weights import ModelWeights
from app.services.container_service import load_weights, save_weights
from app.services.model_runtime import (
    init_random,
    model_forward,
    parameter_tally,
    stream_generate,
)
from app.utils.evaluation import median, time_call
from app.utils.spectral import next_power_of_two

logger = logging.getLogger(__name__)

# Batas rasio TPOT late/early untuk dianggap rata
TPOT_FLATNESS_BOUND = 2.0


def cell_config(cfg: ModelConfig, length: int) -> ModelConfig:
    """
    Konfigurasi model untuk satu sel sweep: window N_max = pangkat dua
    terkecil >= L (minimal 2^J dan 4 * N_mem).
    """
    n_max = max(
        next_power_of_two(length),
        1 << cfg.wrm_levels,
        4 * cfg.memory_tokens,
        2,
    )
    return ModelConfig(**{**cfg.dict(), "n_max": n_max})


def sweep_inputs(cfg: ModelConfig, length: int) -> np.ndarray:
    rng = np.random.default_rng(cfg.seed + length)
    return rng.standard_normal((length, cfg.d_model)).astype(cfg.dtype)


def prompt_inputs(cfg: ModelConfig, length: int, seed: int) -> Union[np.ndarray, List[int]]:
    """Prompt acak deterministik: token id (mode vocab) atau baris embedding."""
    rng = np.random.default_rng(seed)
    if cfg.vocab_size:
        return rng.integers(0, cfg.vocab_size, size=length).tolist()
    return rng.standard_normal((length, cfg.d_model)).astype(cfg.dtype)


class BenchService:
    """
    Service untuk benchmark dan generasi.
    """

    def __init__(self, max_workers: Optional[int] = None):
        self.max_workers = max_workers or settings.SPECTRE_THREADS

    def check_lengths(
        self, spec: SweepSpec, cfg: ModelConfig, allow_long_context: bool = False
    ) -> None:
        """
        Validasi panjang sekuens sebelum sweep dijalankan.
        """
        limit = (
            settings.LONG_CONTEXT_LENGTH if allow_long_context else settings.MAX_DESK_LENGTH
        )
        longest = spec.lengths[-1]
        if longest > limit:
            hint = "" if allow_long_context else " (gunakan flag long-context)"
            raise ConfigError(f"Panjang {longest} melebihi batas {limit}{hint}")
        cached = [k for k in spec.kernels if k in CACHED_KERNELS]
        if cached and longest > cfg.n_max:
            raise CapacityError(
                f"Panjang {longest} melebihi N_max={cfg.n_max} untuk kernel {cached[0]}"
            )

    def measure_cell(
        self, spec: SweepSpec, cfg: ModelConfig, kernel: str, length: int
    ) -> SweepRow:
        """
        Ukur satu sel (kernel, L): latency forward dan TTFT/TPOT generasi,
        masing-masing median atas `repeats` pengulangan setelah warmup.
        """
        cell_cfg = cell_config(cfg, length)
        weights = init_random(cell_cfg)
        X = sweep_inputs(cell_cfg, length)

        latencies = time_call(
            lambda: model_forward(weights, X, cell_cfg, kernel),
            repeats=spec.repeats,
            warmup=spec.warmup,
        )
        reports: List[BenchReport] = [
            stream_generate(weights, X, spec.decode_steps, cell_cfg, kernel).report
            for _ in range(spec.repeats)
        ]

        latency = median(latencies)
        tpots = [r.tpot_ms for r in reports if r.tpot_ms is not None]
        row = SweepRow(
            kernel=kernel,
            seq_len=length,
            median_latency_ms=latency,
            throughput_tok_per_s=length / (latency / 1000.0) if latency > 0 else 0.0,
            ttft_ms=median(r.ttft_ms for r in reports),
            tpot_ms=median(tpots) if tpots else None,
            bytes_state=max(r.peak_state_bytes for r in reports),
        )
        logger.info(
            f"Sweep cell kernel={kernel} L={length}: latency={row.median_latency_ms:.3f} ms, "
            f"TTFT={row.ttft_ms:.3f} ms"
        )
        return row

    async def run_sweep(
        self, spec: SweepSpec, cfg: ModelConfig, allow_long_context: bool = False
    ) -> List[SweepRow]:
        """
        Menjalankan sweep untuk semua pasangan (kernel, L).

        Args:
            spec: Spesifikasi sweep.
            cfg: Konfigurasi model dasar; N_max dipakai sebagai batas kapasitas.
            allow_long_context: Izinkan panjang hingga LONG_CONTEXT_LENGTH.

        Returns:
            List SweepRow, urut per kernel lalu per L.
        """
        self.check_lengths(spec, cfg, allow_long_context)
        cells: List[Tuple[str, int]] = [
            (kernel, length) for kernel in spec.kernels for length in spec.lengths
        ]
        logger.info(
            f"Running sweep: {len(cells)} cells, repeats={spec.repeats}, "
            f"warmup={spec.warmup}, decode_steps={spec.decode_steps}"
        )

        if not spec.parallel or self.max_workers <= 1:
            return [self.measure_cell(spec, cfg, kernel, length) for kernel, length in cells]

        logger.warning(
            f"Parallel sweep with {self.max_workers} workers: "
            "cross-cell interference can distort timings"
        )
        loop = asyncio.get_running_loop()
        with ThreadPoolExecutor(max_workers=self.max_workers) as pool:
            futures = [
                loop.run_in_executor(pool, partial(self.measure_cell, spec, cfg, kernel, length))
                for kernel, length in cells
            ]
            return list(await asyncio.gather(*futures))

    async def measure_tpot_flatness(self, cfg: ModelConfig) -> TpotFlatness:
        """
        Bandingkan median waktu decode pada langkah [N_max, 2*N_max] terhadap
        langkah [0, N_max/4].
        """
        n_max = cfg.n_max
        weights = init_random(cfg)
        prompt = sweep_inputs(cfg, 1)
        result = stream_generate(weights, prompt, 2 * n_max + 1, cfg, "spectre")
        early = median(result.step_ms[: n_max // 4 + 1])
        late = median(result.step_ms[n_max : 2 * n_max + 1])
        ratio = late / early if early > 0 else float("inf")
        passed = 1.0 / TPOT_FLATNESS_BOUND <= ratio <= TPOT_FLATNESS_BOUND
        if passed:
            logger.info(f"TPOT flatness N_max={n_max}: early={early:.4f} ms, late={late:.4f} ms")
        else:
            logger.warning(f"TPOT not flat for N_max={n_max}: ratio={ratio:.2f}")
        return TpotFlatness(n_max=n_max, early_ms=early, late_ms=late, ratio=ratio, passed=passed)

    async def init_weights(
        self, cfg: ModelConfig, path: Union[str, Path]
    ) -> Dict[str, float]:
        """
        Buat bobot acak dari seed dan simpan ke container.

        Returns:
            Hasil parameter_tally.
        """
        weights = init_random(cfg)
        save_weights(weights, path)
        return parameter_tally(weights)

    async def generate(
        self,
        weights_path: Union[str, Path],
        prompt_len: int,
        steps: int,
        kernel: str = "spectre",
        seed: int = settings.DEFAULT_SEED,
    ) -> BenchReport:
        """
        Muat bobot lalu jalankan stream_generate dengan prompt acak.
        """
        weights: ModelWeights = load_weights(weights_path)
        cfg = weights.config
        prompt = prompt_inputs(cfg, prompt_len, seed)
        result = stream_generate(weights, prompt, steps, cfg, kernel)
        return result.report

"""
Verification Service
--------------------
Modul ini bertanggung jawab untuk:
1. Menjalankan suite oracle semua modul (spektral, wavelet, layer, cache)
2. Mengembalikan laporan pass/fail per cek dengan error maksimum

Cek spektral selalu dijalankan di float64; cek layer dan cache memakai
presisi dari VerifyConfig.
"""

from dataclasses import replace
from typing import Callable, Dict, List, Tuple
import logging

import numpy as np

from app.models.bench_models import VerifyCheck, VerifyReport
from app.models.config_models import LayerConfig, ModelConfig, VerifyConfig
from app.models.weights import LayerWeights
from app.services.model_runtime import init_random
from app.services.prefix_cache import CacheState, decode_step, prefill
from app.services.spectre_layer import mix_projected, spectre_mix_forward, wrm_forward
from app.utils.spectral import (
    HalfSpectrum,
    hermitian_extend,
    irfft,
    naive_dft,
    rfft,
    spectral_energy,
)
from app.utils.wavelet import dwt_haar, idwt_haar

logger = logging.getLogger(__name__)

ORACLE_TOLERANCE = 1e-10

TOLERANCES: Dict[str, Dict[str, float]] = {
    "f64": {
        "coherence": 1e-9,
        "descriptor": 1e-10,
        "path": 1e-9,
        "identity": 1e-10,
        "linearity": 1e-9,
        "wrm_unit": 1e-10,
    },
    "f32": {
        "coherence": 1e-3,
        "descriptor": 1e-4,
        "path": 1e-4,
        "identity": 1e-5,
        "linearity": 1e-5,
        "wrm_unit": 1e-6,
    },
}

ORACLE_TRIALS = 100
ORACLE_MAX_N = 256
LAYER_TRIALS = 50
COHERENCE_EVERY = 500


def _relative(error: float, reference: np.ndarray) -> float:
    """Error dinormalisasi terhadap skala referensi (minimal 1)."""
    scale = float(np.max(np.abs(reference))) if np.size(reference) else 0.0
    return error / max(1.0, scale)


def _max_abs(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b)))) if np.size(a) else 0.0


class VerificationService:
    """
    Service untuk menjalankan suite oracle.
    """

    def __init__(self):
        self.corrupt_twiddles = False

    def _rng(self, cfg: VerifyConfig, offset: int = 0) -> np.random.Generator:
        return np.random.default_rng(cfg.seed + offset)

    def _layer(self, cfg: VerifyConfig) -> Tuple[LayerWeights, LayerConfig]:
        model_cfg = ModelConfig(
            n_layers=1,
            heads=1,
            d=cfg.d,
            n_max=cfg.n_max,
            precision=cfg.precision,
            seed=cfg.seed,
        )
        weights = init_random(model_cfg)
        return weights.blocks[0].mixer, model_cfg.layer_config()

    def _oracle_sizes(self, cfg: VerifyConfig) -> List[int]:
        return sorted({8, 64, min(cfg.n_max, ORACLE_MAX_N)})

    def check_rfft_vs_naive(self, cfg: VerifyConfig) -> VerifyCheck:
        rng = self._rng(cfg, 1)
        worst = 0.0
        for n in self._oracle_sizes(cfg):
            for _ in range(ORACLE_TRIALS):
                x = rng.standard_normal(n)
                fast = rfft(x, n).coeffs
                slow = naive_dft(x)[: n // 2 + 1]
                worst = max(worst, _max_abs(fast, slow))
        return VerifyCheck(
            name="rfft_vs_naive_dft",
            passed=worst <= ORACLE_TOLERANCE,
            max_error=worst,
            tolerance=ORACLE_TOLERANCE,
        )

    def check_hermitian(self, cfg: VerifyConfig) -> VerifyCheck:
        rng = self._rng(cfg, 2)
        worst = 0.0
        for n in self._oracle_sizes(cfg):
            full = naive_dft(rng.standard_normal(n))
            k = np.arange(1, n)
            worst = max(worst, _max_abs(full[n - k], np.conj(full[k])))
        return VerifyCheck(
            name="hermitian_symmetry",
            passed=worst <= ORACLE_TOLERANCE,
            max_error=worst,
            tolerance=ORACLE_TOLERANCE,
        )

    def check_rfft_round_trip(self, cfg: VerifyConfig) -> VerifyCheck:
        """iRFFT(RFFT(x)) == x dan half spectrum cukup untuk spektrum penuh."""
        rng = self._rng(cfg, 3)
        worst = 0.0
        for n in self._oracle_sizes(cfg):
            x = rng.standard_normal((n, cfg.d))
            spectrum = rfft(x, n)
            worst = max(worst, _max_abs(irfft(spectrum), x))
            worst = max(worst, _max_abs(hermitian_extend(spectrum), naive_dft(x)))
        return VerifyCheck(
            name="rfft_round_trip",
            passed=worst <= ORACLE_TOLERANCE,
            max_error=worst,
            tolerance=ORACLE_TOLERANCE,
        )

    def check_parseval(self, cfg: VerifyConfig) -> VerifyCheck:
        rng = self._rng(cfg, 4)
        worst = 0.0
        for n in self._oracle_sizes(cfg):
            x = rng.standard_normal((n, cfg.d))
            energy = float(np.sum(x * x))
            worst = max(worst, abs(spectral_energy(rfft(x, n)) - energy) / energy)
        return VerifyCheck(
            name="parseval_energy",
            passed=worst <= ORACLE_TOLERANCE,
            max_error=worst,
            tolerance=ORACLE_TOLERANCE,
            detail="relative",
        )

    def check_dwt_round_trip(self, cfg: VerifyConfig) -> VerifyCheck:
        rng = self._rng(cfg, 5)
        worst = 0.0
        for n in self._oracle_sizes(cfg):
            x = rng.standard_normal((n, cfg.d))
            for levels in (1, 2, 3):
                worst = max(worst, _max_abs(idwt_haar(dwt_haar(x, levels)), x))
        return VerifyCheck(
            name="dwt_round_trip",
            passed=worst <= ORACLE_TOLERANCE,
            max_error=worst,
            tolerance=ORACLE_TOLERANCE,
        )

    def _cache_run(self, cfg: VerifyConfig) -> Tuple[float, float]:
        """
        Prefill + decode acak; kembalikan error koherensi prefix_fft dan sum_q
        maksimum yang teramati di checkpoint.
        """
        mixer, layer_cfg = self._layer(cfg)
        head = mixer.head(0)
        rng = self._rng(cfg, 6)
        dtype = layer_cfg.dtype
        prompt = rng.standard_normal((min(cfg.prompt_len, cfg.n_max), cfg.d)).astype(dtype)
        state, _ = prefill(prompt, head, layer_cfg)
        if self.corrupt_twiddles:
            logger.warning("Verify running with corrupted twiddle table (negative control)")
            state.twiddles = state.twiddles.perturbed(1, 0.05)

        def measure(state: CacheState) -> Tuple[float, float]:
            fresh = rfft(state.v_buf, state.n_max).coeffs
            coherence = _max_abs(state.prefix_fft, fresh)
            if cfg.precision != "f64":
                coherence = _relative(coherence, fresh)
            occupied = state.q_buf[: state.live_length]
            col_sum = occupied.astype(np.float64).sum(axis=0)
            descriptor = _relative(_max_abs(state.sum_q, col_sum), col_sum)
            return coherence, descriptor

        worst_coherence, worst_descriptor = measure(state)
        for step in range(1, cfg.decode_steps + 1):
            decode_step(state, rng.standard_normal(cfg.d).astype(dtype), head, layer_cfg)
            if step % COHERENCE_EVERY == 0 or step == cfg.decode_steps:
                coherence, descriptor = measure(state)
                worst_coherence = max(worst_coherence, coherence)
                worst_descriptor = max(worst_descriptor, descriptor)
        return worst_coherence, worst_descriptor

    def check_cache(self, cfg: VerifyConfig) -> List[VerifyCheck]:
        tol = TOLERANCES[cfg.precision]
        coherence, descriptor = self._cache_run(cfg)
        detail = f"prefill {cfg.prompt_len} + {cfg.decode_steps} decode steps, N_max={cfg.n_max}"
        scale = "absolute" if cfg.precision == "f64" else "relative"
        return [
            VerifyCheck(
                name="cache_coherence",
                passed=coherence <= tol["coherence"],
                max_error=coherence,
                tolerance=tol["coherence"],
                detail=f"{detail}, {scale}",
            ),
            VerifyCheck(
                name="descriptor_coherence",
                passed=descriptor <= tol["descriptor"],
                max_error=descriptor,
                tolerance=tol["descriptor"],
                detail=detail,
            ),
        ]

    def check_path_independence(self, cfg: VerifyConfig) -> VerifyCheck:
        """prefill(N) vs prefill(1) + decode(N-1): field state harus sama."""
        tol = TOLERANCES[cfg.precision]["path"]
        worst = 0.0
        for n_max in sorted({min(32, cfg.n_max), cfg.n_max}):
            sub = VerifyConfig(**{**cfg.dict(), "n_max": n_max})
            mixer, layer_cfg = self._layer(sub)
            head = mixer.head(0)
            X = self._rng(cfg, 7).standard_normal((n_max, cfg.d)).astype(layer_cfg.dtype)
            full, _ = prefill(X, head, layer_cfg)
            stepped, _ = prefill(X[:1], head, layer_cfg)
            for row in X[1:]:
                decode_step(stepped, row, head, layer_cfg)
            if full.t != stepped.t:
                worst = float("inf")
            for name in ("prefix_fft", "v_buf", "q_buf", "sum_q"):
                a, b = getattr(full, name), getattr(stepped, name)
                worst = max(worst, _relative(_max_abs(a, b), a))
        return VerifyCheck(
            name="path_independence",
            passed=worst <= tol,
            max_error=worst,
            tolerance=tol,
        )

    def check_identity_gate(self, cfg: VerifyConfig) -> VerifyCheck:
        """W_q = W_v = W_o = I, g = 1, tanpa Toeplitz/WRM: keluaran == X."""
        tol = TOLERANCES[cfg.precision]["identity"]
        mixer, layer_cfg = self._layer(cfg)
        layer_cfg = layer_cfg.copy(update={"toeplitz_enabled": False, "wrm_enabled": False})
        eye = np.eye(cfg.d, dtype=layer_cfg.dtype)
        identity = replace(
            mixer,
            w_q=eye[None],
            w_v=eye[None],
            w_o=eye,
            gate_w2=np.zeros_like(mixer.gate_w2),
        )
        rng = self._rng(cfg, 8)
        worst = 0.0
        for _ in range(LAYER_TRIALS):
            X = rng.standard_normal((cfg.n_max, cfg.d)).astype(layer_cfg.dtype)
            worst = max(worst, _max_abs(spectre_mix_forward(X, identity, layer_cfg), X))
        return VerifyCheck(
            name="identity_gate",
            passed=worst <= tol,
            max_error=worst,
            tolerance=tol,
        )

    def check_linearity(self, cfg: VerifyConfig) -> VerifyCheck:
        """Q tetap: mix(aV1 + bV2) == a mix(V1) + b mix(V2)."""
        tol = TOLERANCES[cfg.precision]["linearity"]
        mixer, layer_cfg = self._layer(cfg)
        layer_cfg = layer_cfg.copy(update={"wrm_controller_mode": "always"})
        head = mixer.head(0)
        rng = self._rng(cfg, 9)
        dtype = layer_cfg.dtype
        worst = 0.0
        for _ in range(LAYER_TRIALS):
            Q, V1, V2 = (rng.standard_normal((cfg.n_max, cfg.d)).astype(dtype) for _ in range(3))
            a, b = rng.standard_normal(2).astype(dtype)
            lhs = mix_projected(Q, a * V1 + b * V2, head, layer_cfg)
            rhs = a * mix_projected(Q, V1, head, layer_cfg) + b * mix_projected(Q, V2, head, layer_cfg)
            worst = max(worst, _relative(_max_abs(lhs, rhs), rhs))
        return VerifyCheck(
            name="linearity_in_v",
            passed=worst <= tol,
            max_error=worst,
            tolerance=tol,
            detail="relative",
        )

    def check_wrm(self, cfg: VerifyConfig) -> List[VerifyCheck]:
        mixer, layer_cfg = self._layer(cfg)
        layer_cfg = layer_cfg.copy(update={"wrm_controller_mode": "always"})
        head = mixer.head(0)
        rng = self._rng(cfg, 10)
        dtype = layer_cfg.dtype
        V = rng.standard_normal((cfg.n_max, cfg.d)).astype(dtype)
        q_bar = rng.standard_normal(cfg.d).astype(dtype)

        zero = replace(head, wrm_w2=np.zeros_like(head.wrm_w2), wrm_b2=np.zeros_like(head.wrm_b2))
        zero_error = _max_abs(wrm_forward(V, q_bar, zero, layer_cfg), V)

        unit = replace(head, wrm_w2=np.zeros_like(head.wrm_w2), wrm_b2=np.ones_like(head.wrm_b2))
        unit_tol = TOLERANCES[cfg.precision]["wrm_unit"]
        unit_error = _relative(_max_abs(wrm_forward(V, q_bar, unit, layer_cfg), 2 * V), V)
        return [
            VerifyCheck(
                name="wrm_zero_gain",
                passed=zero_error == 0.0,
                max_error=zero_error,
                tolerance=0.0,
            ),
            VerifyCheck(
                name="wrm_unit_gain",
                passed=unit_error <= unit_tol,
                max_error=unit_error,
                tolerance=unit_tol,
            ),
        ]

    async def verify(self, cfg: VerifyConfig, corrupt_twiddles: bool = False) -> VerifyReport:
        """
        Menjalankan seluruh suite oracle.

        Args:
            cfg: Parameter verifikasi.
            corrupt_twiddles: Hook kontrol negatif; memutar satu akar twiddle
                setelah prefill sehingga cek koherensi cache harus gagal.

        Returns:
            VerifyReport dengan satu entri per cek.
        """
        self.corrupt_twiddles = corrupt_twiddles
        suites: List[Callable[[VerifyConfig], object]] = [
            self.check_rfft_vs_naive,
            self.check_hermitian,
            self.check_rfft_round_trip,
            self.check_parseval,
            self.check_dwt_round_trip,
            self.check_cache,
            self.check_path_independence,
            self.check_identity_gate,
            self.check_linearity,
            self.check_wrm,
        ]
        checks: List[VerifyCheck] = []
        for suite in suites:
            result = suite(cfg)
            checks.extend(result if isinstance(result, list) else [result])

        for check in checks:
            status = "PASS" if check.passed else "FAIL"
            line = f"{status} {check.name}: max_error={check.max_error:.3e} (tol {check.tolerance:.1e})"
            if check.passed:
                logger.info(line)
            else:
                logger.warning(line)
        passed = all(check.passed for check in checks)
        return VerifyReport(passed=passed, checks=checks)

import os
import sys

import numpy as np
import pytest

sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..', '..')))
from app.models.config_models import VerifyConfig
import app.services.verification_service as verification
from app.services.verification_service import ORACLE_MAX_N, TOLERANCES, VerificationService

service = VerificationService()

EXPECTED_CHECKS = {
    "rfft_vs_naive_dft",
    "hermitian_symmetry",
    "rfft_round_trip",
    "parseval_energy",
    "dwt_round_trip",
    "cache_coherence",
    "descriptor_coherence",
    "path_independence",
    "identity_gate",
    "linearity_in_v",
    "wrm_zero_gain",
    "wrm_unit_gain",
}


def by_name(report):
    return {check.name: check for check in report.checks}


@pytest.mark.asyncio
async def test_small_config_passes_all_checks():
    report = await service.verify(VerifyConfig(n_max=32, d=4, decode_steps=500))
    checks = by_name(report)
    assert set(checks) == EXPECTED_CHECKS
    failed = [check.name for check in report.checks if not check.passed]
    assert failed == []
    assert report.passed


@pytest.mark.asyncio
async def test_minimum_config_passes():
    report = await service.verify(VerifyConfig(n_max=8, d=2, decode_steps=200))
    assert report.passed


@pytest.mark.asyncio
async def test_f64_uses_tight_tolerances():
    report = await service.verify(VerifyConfig(n_max=32, d=4, precision="f64", decode_steps=500))
    checks = by_name(report)
    assert checks["cache_coherence"].tolerance == TOLERANCES["f64"]["coherence"]
    assert checks["cache_coherence"].detail.endswith("absolute")
    assert checks["wrm_zero_gain"].max_error == 0.0
    assert report.passed


@pytest.mark.asyncio
async def test_corrupted_twiddles_fail_cache_coherence():
    report = await service.verify(
        VerifyConfig(n_max=32, d=4, decode_steps=500), corrupt_twiddles=True
    )
    checks = by_name(report)
    assert not checks["cache_coherence"].passed
    assert checks["cache_coherence"].max_error > checks["cache_coherence"].tolerance
    assert checks["rfft_vs_naive_dft"].passed
    assert not report.passed


@pytest.mark.asyncio
async def test_negative_control_does_not_leak():
    await service.verify(VerifyConfig(n_max=16, d=2, decode_steps=100), corrupt_twiddles=True)
    report = await service.verify(VerifyConfig(n_max=16, d=2, decode_steps=100))
    assert report.passed


def test_f64_cache_coherence_absolute_over_10k_steps():
    cfg = VerifyConfig(n_max=16, d=2, precision="f64", decode_steps=10000)
    coherence = service.check_cache(cfg)[0]
    assert coherence.name == "cache_coherence"
    assert coherence.max_error < 1e-9
    assert coherence.passed


def test_oracle_dft_sizes_capped_for_large_windows(monkeypatch):
    sizes = []
    real_naive_dft = verification.naive_dft

    def recording_naive_dft(x):
        sizes.append(np.shape(x)[0])
        return real_naive_dft(x)

    monkeypatch.setattr(verification, "naive_dft", recording_naive_dft)
    cfg = VerifyConfig(n_max=32768, d=2)
    assert service.check_rfft_vs_naive(cfg).passed
    assert service.check_hermitian(cfg).passed
    assert service.check_rfft_round_trip(cfg).passed
    assert set(sizes) == {8, 64, ORACLE_MAX_N}


def test_verify_config_rejects_small_or_odd_windows():
    for n_max in (4, 100):
        with pytest.raises(ValueError):
            VerifyConfig(n_max=n_max)


@pytest.mark.skipif(
    os.environ.get("SPECTRE_RUN_TIMING") != "1",
    reason="suite verify default (10000 langkah) lambat; set SPECTRE_RUN_TIMING=1",
)
@pytest.mark.timing
@pytest.mark.asyncio
async def test_default_config_passes():
    report = await service.verify(VerifyConfig())
    assert report.passed

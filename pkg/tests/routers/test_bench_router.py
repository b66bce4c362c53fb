import os
import sys

import pytest
from fastapi import HTTPException

sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..', '..')))
from app.models.bench_models import SweepRequest, TpotRequest
from app.models.config_models import ModelConfig, SweepSpec
from app.routers import bench
from app.utils.report import read_csv


def small_model(**kwargs):
    return ModelConfig(n_layers=1, heads=1, d=4, n_max=64, d_hidden=8, **kwargs)


@pytest.mark.asyncio
async def test_verify_endpoint_small_config():
    report = await bench.verify(n_max=16, d=2, f64=False, decode_steps=50)
    assert report.passed
    assert any(check.name == "cache_coherence" for check in report.checks)


@pytest.mark.asyncio
async def test_verify_endpoint_rejects_bad_window():
    with pytest.raises(HTTPException) as exc:
        await bench.verify(n_max=12, d=2, f64=False, decode_steps=10)
    assert exc.value.status_code == 400


@pytest.mark.asyncio
async def test_sweep_endpoint_writes_csv(tmp_path):
    csv_path = tmp_path / "out" / "sweep.csv"
    request = SweepRequest(
        spec=SweepSpec(lengths=[8], kernels=["spectre"], repeats=3, decode_steps=2),
        model=small_model(),
        csv_path=str(csv_path),
    )
    result = await bench.sweep(request)
    assert result.status == "success"
    assert len(result.rows) == 1
    assert result.exponents == {}
    assert result.csv_path == str(csv_path)
    assert read_csv(csv_path)[0].seq_len == 8


@pytest.mark.asyncio
async def test_sweep_endpoint_fits_exponents():
    request = SweepRequest(
        spec=SweepSpec(lengths=[8, 16, 32], kernels=["spectre"], repeats=3, decode_steps=0),
        model=small_model(),
    )
    result = await bench.sweep(request)
    assert set(result.exponents) == {"spectre"}
    assert result.exponents["spectre"].points == 3
    assert result.csv_path is None


@pytest.mark.asyncio
async def test_sweep_endpoint_capacity_is_bad_request():
    request = SweepRequest(
        spec=SweepSpec(lengths=[128], kernels=["spectre"], repeats=3),
        model=small_model(),
    )
    with pytest.raises(HTTPException) as exc:
        await bench.sweep(request)
    assert exc.value.status_code == 400


@pytest.mark.asyncio
async def test_tpot_endpoint_reports_window():
    result = await bench.tpot(TpotRequest(model=ModelConfig(n_layers=1, heads=1, d=4, n_max=16, d_hidden=8)))
    assert result.n_max == 16
    assert result.early_ms >= 0 and result.late_ms >= 0


def test_data_path_resolves_relative(tmp_path, monkeypatch):
    monkeypatch.setattr(bench.settings, "DATA_DIR", str(tmp_path))
    resolved = bench.data_path("runs/a.csv")
    assert resolved == tmp_path / "runs" / "a.csv"
    assert resolved.parent.is_dir()
    absolute = tmp_path / "b.csv"
    assert bench.data_path(str(absolute)) == absolute

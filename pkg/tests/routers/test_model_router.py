import os
import sys

import pytest
from fastapi import HTTPException

sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..', '..')))
from app.models.bench_models import GenerateInput, InitWeightsInput
from app.models.config_models import ModelConfig
from app.routers import model


def small_model(**kwargs):
    return ModelConfig(n_layers=2, heads=2, d=4, n_max=32, d_hidden=8, **kwargs)


@pytest.mark.asyncio
async def test_init_then_generate(tmp_path):
    path = tmp_path / "weights.spcw"
    result = await model.init_weights(InitWeightsInput(config=small_model(), path=str(path)))
    assert result.status == "success"
    assert result.path == str(path)
    assert result.parameters["total"] > 0
    assert 0 < result.parameters["ratio"] < 1

    report = await model.generate(GenerateInput(weights_path=str(path), prompt_len=8, steps=4))
    assert report.seq_len == 8
    assert report.generated_tokens == 4
    assert report.tpot_ms is not None


@pytest.mark.asyncio
async def test_generate_missing_file_is_not_found(tmp_path):
    request = GenerateInput(weights_path=str(tmp_path / "missing.spcw"))
    with pytest.raises(HTTPException) as exc:
        await model.generate(request)
    assert exc.value.status_code == 404


@pytest.mark.asyncio
async def test_generate_prompt_over_window_is_bad_request(tmp_path):
    path = tmp_path / "weights.spcw"
    await model.init_weights(InitWeightsInput(config=small_model(), path=str(path)))
    request = GenerateInput(weights_path=str(path), prompt_len=33, steps=1)
    with pytest.raises(HTTPException) as exc:
        await model.generate(request)
    assert exc.value.status_code == 400


@pytest.mark.asyncio
async def test_generate_corrupted_file_is_bad_request(tmp_path):
    path = tmp_path / "weights.spcw"
    path.write_bytes(b"SPCW" + b"\x00" * 8)
    with pytest.raises(HTTPException) as exc:
        await model.generate(GenerateInput(weights_path=str(path)))
    assert exc.value.status_code == 400

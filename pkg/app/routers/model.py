"""
Model Router - Endpoint untuk inisialisasi bobot dan generasi streaming
"""

from fastapi import APIRouter, HTTPException
import logging

from app.core.exceptions import SpectreError
from app.models.bench_models import (
    BenchReport,
    GenerateInput,
    InitWeightsInput,
    InitWeightsResult,
)
from app.routers.bench import data_path
from app.services.bench_service import BenchService

logger = logging.getLogger(__name__)

router = APIRouter(
    prefix="/model",
    tags=["model"],
    responses={404: {"description": "Not found"}},
)


@router.post("/init", response_model=InitWeightsResult)
async def init_weights(request: InitWeightsInput):
    """
    Endpoint untuk membuat bobot acak deterministik dan menyimpannya.
    """
    try:
        path = data_path(request.path)
        tally = await BenchService().init_weights(request.config, path)
        logger.info(f"Weights initialized at {path}: {tally['total']} parameters")
        return InitWeightsResult(status="success", path=str(path), parameters=tally)

    except HTTPException:
        raise
    except (SpectreError, ValueError) as e:
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        logger.exception("Error saat inisialisasi bobot")
        raise HTTPException(status_code=500, detail=f"Error during init: {str(e)}")


@router.post("/generate", response_model=BenchReport)
async def generate(request: GenerateInput):
    """
    Endpoint untuk generasi streaming dari file bobot.
    """
    try:
        path = data_path(request.weights_path)
        if not path.exists():
            raise HTTPException(
                status_code=404, detail=f"File bobot tidak ditemukan: {path}"
            )
        return await BenchService().generate(
            path,
            prompt_len=request.prompt_len,
            steps=request.steps,
            kernel=request.kernel,
            seed=request.seed,
        )

    except HTTPException:
        raise
    except FileNotFoundError as e:
        raise HTTPException(status_code=404, detail=str(e))
    except (SpectreError, ValueError) as e:
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        logger.exception("Error saat generasi")
        raise HTTPException(status_code=500, detail=f"Error during generation: {str(e)}")

"""
Bench Router - Endpoint untuk verifikasi, sweep, dan pengukuran TPOT
"""

from fastapi import APIRouter, HTTPException, Query
from pathlib import Path
import logging

from app.core.config import settings
from app.core.exceptions import InsufficientData, SpectreError
from app.models.bench_models import (
    SweepRequest,
    SweepResult,
    TpotFlatness,
    TpotRequest,
    VerifyReport,
)
from app.models.config_models import VerifyConfig
from app.services.bench_service import BenchService
from app.services.verification_service import VerificationService
from app.utils.evaluation import slope_fit
from app.utils.report import emit_csv

logger = logging.getLogger(__name__)

router = APIRouter(
    prefix="/bench",
    tags=["bench"],
    responses={404: {"description": "Not found"}},
)


def data_path(path: str) -> Path:
    """Path relatif diletakkan di bawah DATA_DIR."""
    resolved = Path(path)
    if not resolved.is_absolute():
        resolved = Path(settings.DATA_DIR) / resolved
    resolved.parent.mkdir(parents=True, exist_ok=True)
    return resolved


@router.get("/verify", response_model=VerifyReport)
async def verify(
    n_max: int = Query(256, description="Window N_max untuk cek cache"),
    d: int = Query(16, description="Dimensi per head"),
    f64: bool = Query(False, description="Jalankan cek layer/cache dalam float64"),
    decode_steps: int = Query(10000, description="Jumlah langkah decode cek koherensi"),
):
    """
    Endpoint untuk menjalankan suite oracle. Status 200 walaupun ada cek yang
    gagal; verdict ada di field `passed`.
    """
    try:
        cfg = VerifyConfig(
            n_max=n_max,
            d=d,
            precision="f64" if f64 else "f32",
            decode_steps=decode_steps,
            seed=settings.DEFAULT_SEED,
        )
        report = await VerificationService().verify(cfg)
        logger.info(f"Verify finished: passed={report.passed}")
        return report

    except HTTPException:
        raise
    except (SpectreError, ValueError) as e:
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        logger.exception("Error saat menjalankan verify")
        raise HTTPException(status_code=500, detail=f"Error during verify: {str(e)}")


@router.post("/sweep", response_model=SweepResult)
async def sweep(request: SweepRequest):
    """
    Endpoint untuk sweep latency/throughput. Jika `csv_path` diisi, hasil
    ditulis sebagai CSV.
    """
    try:
        rows = await BenchService().run_sweep(request.spec, request.model)

        try:
            exponents = slope_fit(rows)
        except InsufficientData as e:
            logger.info(f"Slope fit skipped: {e}")
            exponents = {}

        csv_path = None
        if request.csv_path:
            csv_path = str(data_path(request.csv_path))
            emit_csv(rows, csv_path)

        return SweepResult(
            status="success", rows=rows, exponents=exponents, csv_path=csv_path
        )

    except HTTPException:
        raise
    except (SpectreError, ValueError) as e:
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        logger.exception("Error saat menjalankan sweep")
        raise HTTPException(status_code=500, detail=f"Error during sweep: {str(e)}")


@router.post("/tpot", response_model=TpotFlatness)
async def tpot(request: TpotRequest):
    try:
        return await BenchService().measure_tpot_flatness(request.model)

    except HTTPException:
        raise
    except (SpectreError, ValueError) as e:
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        logger.exception("Error saat mengukur TPOT")
        raise HTTPException(status_code=500, detail=f"Error during TPOT: {str(e)}")

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
import logging
import uvicorn

from app.core.config import settings

# Setup logging
logging.basicConfig(level=settings.LOG_LEVEL)
logger = logging.getLogger(__name__)

app = FastAPI(
    title=settings.APP_NAME,
    description="Backend benchmark dan verifikasi untuk SPECTRE spectral token mixer",
    version=settings.APP_VERSION,
)

# Konfigurasi CORS
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],  # Untuk development
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

# Import router
from app.routers import bench, model

# Daftarkan router dengan prefix /api
app.include_router(bench.router, prefix="/api")
app.include_router(model.router, prefix="/api")


@app.on_event("startup")
async def startup_event():
    logger.info(f"=== Starting {settings.APP_NAME} ===")
    logger.info(
        f"Data dir: {settings.DATA_DIR}, worker threads: {settings.SPECTRE_THREADS}"
    )
    logger.info(f"=== {settings.APP_NAME} ready to serve on PORT 8080! ===")


@app.get("/api")
async def api_status():
    """Main API endpoint - Health check and system status."""
    return {
        "message": f"{settings.APP_NAME} API is running!",
        "status": "active",
        "port": 8080,
        "version": settings.APP_VERSION,
        "endpoints": {
            "bench": "/api/bench/*",
            "model": "/api/model/*",
        },
    }


@app.get("/")
async def read_root():
    return {"message": f"{settings.APP_NAME} API is running! Visit /api for API status"}


@app.get("/health")
async def health_check():
    return {"status": "ok", "service": settings.APP_NAME, "port": 8080}


if __name__ == "__main__":
    uvicorn.run("main:app", host="0.0.0.0", port=8080, reload=True)

"""
Config
-----
Modul ini berisi konfigurasi aplikasi.
"""

from pydantic import BaseSettings


class Settings(BaseSettings):
    """
    Konfigurasi aplikasi.
    """

    APP_NAME: str = "SPECTRE-Bench"
    APP_VERSION: str = "0.1.0"

    # Lokasi data (weights, cache snapshot, laporan CSV)
    DATA_DIR: str = "app/data"

    # Logging
    LOG_LEVEL: str = "INFO"

    # Batas thread untuk sweep paralel
    SPECTRE_THREADS: int = 1

    DEFAULT_SEED: int = 42

    # Panjang sekuens maksimum untuk sweep skala desktop
    MAX_DESK_LENGTH: int = 32768
    LONG_CONTEXT_LENGTH: int = 131072

    class Config:
        env_file = ".env"


settings = Settings()

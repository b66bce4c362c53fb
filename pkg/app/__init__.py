# Init file untuk package app
#
# Struktur package:
# - core: Konfigurasi, exception, dan fungsi inti
# - models: Model/schema Pydantic dan container bobot
# - routers: Router FastAPI
# - services: Layer SPECTRE, prefix cache, runtime model, benchmark
# - utils: Utilitas spektral, wavelet, evaluasi, dan laporan CSV

"""
Exceptions
----------
Hierarki error untuk seluruh pustaka SPECTRE.
"""


class SpectreError(Exception):
    """Base class untuk semua error domain."""


class ConfigError(SpectreError, ValueError):
    """Konfigurasi tidak valid (mis. panjang FFT bukan pangkat dua)."""


class InputError(SpectreError, ValueError):
    """Input mengandung NaN/Inf."""


class ShapeError(SpectreError, ValueError):
    """Dimensi tensor tidak sesuai."""


class CapacityError(SpectreError):
    """Panjang sekuens melebihi kapasitas window N_max."""


class StateError(SpectreError):
    """Operasi pada cache state yang belum siap atau sudah dipakai."""


class FormatError(SpectreError):
    """File container rusak atau tidak sesuai format."""


class ChecksumError(FormatError):
    """CRC32 payload tidak cocok."""


class InsufficientData(SpectreError):
    """Data tidak cukup untuk fitting."""

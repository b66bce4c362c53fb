"""
Evaluation Utilities
-----------------
Modul ini berisi fungsi-fungsi untuk evaluasi hasil benchmark:
1. Median timing setelah warmup
2. Fitting eksponen skala log(latency) terhadap log(L)
"""

from typing import Callable, Dict, Iterable, List, Tuple
from collections import defaultdict
import logging
import time

import numpy as np

from app.core.exceptions import InsufficientData
from app.models.bench_models import SlopeFit, SweepRow

logger = logging.getLogger(__name__)

MIN_FIT_POINTS = 3


def median(values: Iterable[float]) -> float:
    """
    Menghitung median dari list timing.

    Args:
        values: Nilai timing (ms).

    Returns:
        Nilai median.
    """
    arr = np.asarray(list(values), dtype=np.float64)
    if arr.size == 0:
        raise InsufficientData("Tidak ada nilai untuk median")
    return float(np.median(arr))


def time_call(fn: Callable[[], object], repeats: int, warmup: int) -> List[float]:
    """
    Jalankan fn sebanyak warmup (dibuang) + repeats, kembalikan wall time (ms)
    tiap pengulangan.
    """
    for _ in range(warmup):
        fn()
    timings = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        timings.append((time.perf_counter() - start) * 1000.0)
    return timings


def fit_exponent(lengths: Iterable[float], latencies: Iterable[float]) -> Tuple[float, float, float]:
    """
    Least-squares log(latency) = alpha * log(L) + c.

    Returns:
        Tuple (alpha, intercept, RMS residual di ruang log).
    """
    x = np.log(np.asarray(list(lengths), dtype=np.float64))
    y = np.log(np.asarray(list(latencies), dtype=np.float64))
    if x.size < MIN_FIT_POINTS:
        raise InsufficientData(
            f"Butuh minimal {MIN_FIT_POINTS} panjang sekuens, diperoleh {x.size}"
        )
    (alpha, intercept), residuals, *_ = np.polyfit(x, y, 1, full=True)
    sse = float(residuals[0]) if len(residuals) else 0.0
    return float(alpha), float(intercept), float(np.sqrt(sse / x.size))


def slope_fit(rows: List[SweepRow]) -> Dict[str, SlopeFit]:
    """
    Menghitung eksponen skala per kernel.

    Args:
        rows: Baris hasil sweep.

    Returns:
        Dictionary mapping nama kernel ke SlopeFit.
    """
    grouped: Dict[str, List[SweepRow]] = defaultdict(list)
    for row in rows:
        grouped[row.kernel].append(row)
    if not grouped:
        raise InsufficientData("Tidak ada baris sweep untuk di-fit")

    fits = {}
    for kernel, kernel_rows in grouped.items():
        kernel_rows = sorted(kernel_rows, key=lambda r: r.seq_len)
        if len({r.seq_len for r in kernel_rows}) < MIN_FIT_POINTS:
            raise InsufficientData(
                f"Kernel {kernel}: butuh minimal {MIN_FIT_POINTS} panjang sekuens"
            )
        alpha, intercept, residual = fit_exponent(
            [r.seq_len for r in kernel_rows],
            [r.median_latency_ms for r in kernel_rows],
        )
        fits[kernel] = SlopeFit(
            kernel=kernel,
            alpha=alpha,
            intercept=intercept,
            residual=residual,
            points=len(kernel_rows),
        )
        logger.info(f"Slope fit {kernel}: alpha={alpha:.3f}, residual={residual:.4f}")
    return fits

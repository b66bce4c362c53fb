"""
Report Utilities
----------------
Emit dan parse CSV hasil sweep.
"""

from pathlib import Path
from typing import List, Union
import logging

import pandas as pd

from app.models.bench_models import SweepRow

logger = logging.getLogger(__name__)

CSV_COLUMNS = [
    "kernel",
    "L",
    "median_latency_ms",
    "throughput_tok_per_s",
    "ttft_ms",
    "tpot_ms",
    "bytes_state",
]


def rows_to_frame(rows: List[SweepRow]) -> pd.DataFrame:
    records = [row.dict() for row in rows]
    frame = pd.DataFrame.from_records(
        records, columns=[c if c != "L" else "seq_len" for c in CSV_COLUMNS]
    )
    return frame.rename(columns={"seq_len": "L"})


def emit_csv(rows: List[SweepRow], path: Union[str, Path]) -> None:
    """
    Tulis baris sweep ke CSV: header tetap, quoting RFC-4180, akhir baris LF,
    6 digit signifikan.

    Args:
        rows: Baris hasil sweep (boleh kosong).
        path: Path file tujuan.
    """
    frame = rows_to_frame(rows)
    frame.to_csv(
        path,
        index=False,
        float_format="%.6g",
        lineterminator="\n",
        na_rep="",
    )
    logger.info(f"Wrote {len(rows)} sweep rows to {path}")


def read_csv(path: Union[str, Path]) -> List[SweepRow]:
    frame = pd.read_csv(path, dtype={"kernel": str})
    rows = []
    for record in frame.to_dict(orient="records"):
        tpot = record["tpot_ms"]
        rows.append(
            SweepRow(
                kernel=record["kernel"],
                seq_len=int(record["L"]),
                median_latency_ms=float(record["median_latency_ms"]),
                throughput_tok_per_s=float(record["throughput_tok_per_s"]),
                ttft_ms=float(record["ttft_ms"]),
                tpot_ms=None if pd.isna(tpot) else float(tpot),
                bytes_state=int(record["bytes_state"]),
            )
        )
    return rows

"""Readers for the simulator's CSV outputs.

This package talks to the simulator only through its CSV files, so the
expected headers are restated here and validated on read; a schema change
on either side fails loudly instead of producing a silently wrong figure.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

RECORD_HEADER = ["time_s", "e_kin_J", "e_strain_J", "e_total_J", "control_m_per_s"]
CONTROLS_HEADER = ["t_start_s", "value_m_per_s"]


class SchemaError(ValueError):
    """A CSV file is missing or does not match the expected schema."""


def _read_table(path: str | Path, header: list[str]) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise SchemaError(f"{path}: no such file")
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != header:
        raise SchemaError(
            f"{path}: expected header {','.join(header)}, "
            f"got {','.join(rows[0]) if rows else '<empty file>'}"
        )
    try:
        data = np.array([[float(v) for v in row] for row in rows[1:]], dtype=np.float64)
    except ValueError as exc:
        raise SchemaError(f"{path}: non-numeric cell ({exc})") from None
    if data.size == 0:
        data = data.reshape(0, len(header))
    if data.shape[1] != len(header):
        raise SchemaError(f"{path}: expected {len(header)} columns, got {data.shape[1]}")
    return data


def read_record(path: str | Path) -> dict[str, np.ndarray]:
    """Energy/control time series of one run, keyed by column name."""
    data = _read_table(path, RECORD_HEADER)
    return {name: data[:, i] for i, name in enumerate(RECORD_HEADER)}


def read_controls(path: str | Path) -> dict[str, np.ndarray]:
    """Zero-order-hold control schedule (start time and value per hold)."""
    data = _read_table(path, CONTROLS_HEADER)
    return {name: data[:, i] for i, name in enumerate(CONTROLS_HEADER)}

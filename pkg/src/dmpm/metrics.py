"""Damping performance metrics and the CSV emission/parsing used by the CLI.

CSV values are printed with 17 significant digits so a write/read round
trip reproduces the float64 values bit for bit.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from dmpm.errors import ConfigurationError
from dmpm.integrate import ControlSequence, RolloutRecord

RECORD_HEADER = ["time_s", "e_kin_J", "e_strain_J", "e_total_J", "control_m_per_s"]
CONTROLS_HEADER = ["t_start_s", "value_m_per_s"]
_FMT = "%.17g"


@dataclass
class DampingMetrics:
    """Table-style summary of one damping run.

    ``t_80``/``t_90`` measure the time from the disturbance end to the last
    crossing below 20 %/10 % of the peak kinetic energy; they are NaN when
    the series never stays below the threshold.
    """

    peak_e_kin: float  # J, max over the record
    t_80: float  # s
    t_90: float  # s
    mean_e_kin: float  # J, averaged over [1, 2] s

    @property
    def thresholds(self) -> tuple[float, float]:
        return 0.2 * self.peak_e_kin, 0.1 * self.peak_e_kin


def _last_crossing(times: np.ndarray, values: np.ndarray, threshold: float) -> float:
    """Time after which the series stays below ``threshold`` for good.

    Returns the last time the series is at or above the threshold (the
    series is below it ever after), 0.0 if it never reaches the threshold,
    and NaN if it ends at or above it.
    """
    above = values >= threshold
    if not above.any():
        return 0.0
    if above[-1]:
        return math.nan
    return float(times[np.nonzero(above)[0][-1]])


def compute_metrics(
    record: RolloutRecord,
    disturbance_end: float = 0.4,
    mean_window: tuple[float, float] = (1.0, 2.0),
) -> DampingMetrics:
    """Damping metrics from a recorded energy time series."""
    t = record.times
    e = record.e_kin
    if t.size == 0:
        raise ConfigurationError("empty record; nothing to compute metrics on")
    peak = float(np.max(e))
    post = t >= disturbance_end - 1e-12
    t80_abs = _last_crossing(t[post], e[post], 0.2 * peak)
    t90_abs = _last_crossing(t[post], e[post], 0.1 * peak)
    t_80 = t80_abs if math.isnan(t80_abs) else max(t80_abs - disturbance_end, 0.0)
    t_90 = t90_abs if math.isnan(t90_abs) else max(t90_abs - disturbance_end, 0.0)
    lo, hi = mean_window
    sel = (t >= lo - 1e-12) & (t <= hi + 1e-12)
    mean_e = float(np.mean(e[sel])) if sel.any() else math.nan
    return DampingMetrics(peak_e_kin=peak, t_80=t_80, t_90=t_90, mean_e_kin=mean_e)


def write_record_csv(path: str | Path, record: RolloutRecord) -> None:
    """Emit the sampled energy/control time series."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RECORD_HEADER)
        for i in range(record.times.size):
            w.writerow(
                _FMT % v
                for v in (
                    record.times[i], record.e_kin[i], record.e_strain[i],
                    record.e_kin[i] + record.e_strain[i], record.control[i],
                )
            )


def read_record_csv(path: str | Path) -> RolloutRecord:
    """Parse a record CSV back into a RolloutRecord (without a final state)."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != RECORD_HEADER:
        raise ConfigurationError(f"{path}: missing or malformed record CSV header")
    data = np.array([[float(v) for v in row] for row in rows[1:]], dtype=np.float64)
    if data.size == 0:
        data = data.reshape(0, 5)
    return RolloutRecord(
        times=data[:, 0], e_kin=data[:, 1], e_strain=data[:, 2], control=data[:, 4],
        cost=math.nan, n_steps=0, final_state=None,
    )


def write_controls_csv(path: str | Path, controls: ControlSequence) -> None:
    """Emit a ZOH control schedule, one row per hold interval."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CONTROLS_HEADER)
        for k, v in enumerate(controls.values):
            w.writerow((_FMT % (controls.t_start + k * controls.hold), _FMT % v))


def read_controls_csv(path: str | Path) -> ControlSequence:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != CONTROLS_HEADER:
        raise ConfigurationError(f"{path}: missing or malformed controls CSV header")
    data = np.array([[float(v) for v in row] for row in rows[1:]], dtype=np.float64)
    if data.shape[0] < 1:
        raise ConfigurationError(f"{path}: controls CSV has no rows")
    t = data[:, 0]
    if data.shape[0] > 1:
        holds = np.diff(t)
        if np.ptp(holds) > 1e-9 * max(abs(t[-1]), 1.0):
            raise ConfigurationError(f"{path}: non-uniform hold intervals")
        hold = float(holds[0])
    else:
        hold = 1.0
    return ControlSequence(values=data[:, 1], hold=hold, t_start=float(t[0]))

"""Figure regeneration from run CSVs.

Two figures: an energy-conservation comparison (our integrator vs the
dissipative baseline) and a 2x2 damping panel (energy trajectories of the
no-action / optimized / sampling-control runs plus the applied control
sequences). Figures are regenerated artifacts: every number shown in a
legend is recomputed from the CSVs with the same definitions the
simulator's ``metrics`` subcommand uses, so the two always agree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from dmpm_plots.io import read_controls, read_record  # noqa: E402

# fixed output style; nothing here depends on the environment or the clock
STYLE = {
    "figure.dpi": 120,
    "savefig.dpi": 120,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "svg.hashsalt": "dmpm-plots",
}


@dataclass
class FigureSpec:
    """Inputs and layout of one figure."""

    inputs: list[Path]
    layout: str = "single"  # "single" | "2x2"
    thresholds: tuple[float, float] | None = None  # J, 80 % / 90 % lines
    out: Path = Path("figure.png")

    def __post_init__(self):
        self.inputs = [Path(p) for p in self.inputs]
        self.out = Path(self.out)
        if self.layout not in ("single", "2x2"):
            raise ValueError(f"unknown layout {self.layout!r}")


def drift_pct(rec: dict[str, np.ndarray]) -> float:
    """Relative total-energy drift over the record, in percent."""
    e = rec["e_total_J"]
    return 100.0 * abs(e[-1] - e[0]) / abs(e[0])


def _last_crossing(times: np.ndarray, values: np.ndarray, threshold: float) -> float:
    above = values >= threshold
    if not above.any():
        return 0.0
    if above[-1]:
        return math.nan
    return float(times[np.nonzero(above)[0][-1]])


def damping_times(
    rec: dict[str, np.ndarray], disturbance_end: float = 0.4
) -> tuple[float, float, float]:
    """(peak E_kin, t_80, t_90) with the simulator's metric definitions:
    time from the disturbance end until the kinetic energy stays below
    20 % / 10 % of its peak for good."""
    t, e = rec["time_s"], rec["e_kin_J"]
    peak = float(np.max(e))
    post = t >= disturbance_end - 1e-12
    out = []
    for frac in (0.2, 0.1):
        t_abs = _last_crossing(t[post], e[post], frac * peak)
        out.append(t_abs if math.isnan(t_abs) else max(t_abs - disturbance_end, 0.0))
    return peak, out[0], out[1]


def _save(fig, out: Path) -> None:
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    # strip volatile metadata so identical inputs give identical bytes
    meta = {"Date": None} if out.suffix == ".svg" else {"Software": "dmpm-plots"}
    fig.savefig(out, metadata=meta)
    plt.close(fig)


def plot_energy_comparison(ours_csv, baseline_csv, out) -> Path:
    """Overlaid total-energy curves with drift percentages in the legend."""
    ours = read_record(ours_csv)
    base = read_record(baseline_csv)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(6.0, 3.6))
        ax.plot(
            ours["time_s"], ours["e_total_J"], color="#1f6fb4",
            label=f"RK4 (drift {drift_pct(ours):.2f} %)",
        )
        ax.plot(
            base["time_s"], base["e_total_J"], color="#e88a8a",
            label=f"FLIP baseline (drift {drift_pct(base):.2f} %)",
        )
        ax.set_xlabel("time [s]")
        ax.set_ylabel("total energy [J]")
        ax.set_title("Flexing beam: total energy")
        ax.legend(loc="best")
        fig.tight_layout()
        _save(fig, out)
    return Path(out)


def _energy_panel(ax, rec, title, thresholds):
    t = rec["time_s"]
    ax.plot(t, rec["e_kin_J"], color="#1f6fb4", label="kinetic")
    ax.plot(t, rec["e_strain_J"], color="#7fae7f", label="strain")
    for level, style, name in zip(thresholds, ("--", ":"), ("80 %", "90 %")):
        ax.axhline(level, color="#888888", linestyle=style, linewidth=0.9,
                   label=f"{name} level ({level:.3g} J)")
    ax.set_title(title)
    ax.set_xlabel("time [s]")
    ax.set_ylabel("energy [J]")
    ax.legend(loc="upper right", fontsize=7)


def plot_damping_panels(
    no_action_csv,
    optimized_csv,
    mppi_csv,
    controls_csvs,
    out,
    thresholds: tuple[float, float] | None = None,
    disturbance_end: float = 0.4,
) -> Path:
    """2x2 panel figure: energies of the three runs plus control sequences.

    Threshold lines default to 20 %/10 % of the no-action kinetic-energy
    peak (the levels the t_80/t_90 metrics are measured against).
    """
    recs = {
        "no action": read_record(no_action_csv),
        "optimized": read_record(optimized_csv),
        "sampling (MPPI)": read_record(mppi_csv),
    }
    if thresholds is None:
        peak = float(np.max(recs["no action"]["e_kin_J"]))
        thresholds = (0.2 * peak, 0.1 * peak)

    spans = {k: (r["time_s"][0], r["time_s"][-1]) for k, r in recs.items()}
    ranges_differ = len({(round(a, 9), round(b, 9)) for a, b in spans.values()}) > 1

    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(2, 2, figsize=(9.0, 6.4))
        for ax, (name, rec) in zip(axes.flat[:3], recs.items()):
            _, t80, t90 = damping_times(rec, disturbance_end)
            t80s = "n/a" if math.isnan(t80) else f"{t80:.3f} s"
            t90s = "n/a" if math.isnan(t90) else f"{t90:.3f} s"
            _energy_panel(ax, rec, f"{name} (t80 {t80s}, t90 {t90s})", thresholds)
        ax = axes.flat[3]
        for path in controls_csvs:
            ctl = read_controls(path)
            ax.step(ctl["t_start_s"], ctl["value_m_per_s"], where="post",
                    label=Path(path).stem)
        ax.set_title("applied control sequences")
        ax.set_xlabel("time [s]")
        ax.set_ylabel("control [m/s]")
        if controls_csvs:
            ax.legend(loc="upper right", fontsize=7)
        if ranges_differ:
            fig.text(0.5, 0.005, "warning: input records cover different time ranges",
                     ha="center", fontsize=7, color="#aa3333")
        fig.tight_layout()
        _save(fig, out)
    return Path(out)

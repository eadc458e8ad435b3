"""Figure regeneration from dmpm run CSVs."""

from dmpm_plots.figures import (
    FigureSpec,
    damping_times,
    drift_pct,
    plot_damping_panels,
    plot_energy_comparison,
)
from dmpm_plots.io import SchemaError, read_controls, read_record

__all__ = [
    "FigureSpec",
    "SchemaError",
    "damping_times",
    "drift_pct",
    "plot_damping_panels",
    "plot_energy_comparison",
    "read_controls",
    "read_record",
]

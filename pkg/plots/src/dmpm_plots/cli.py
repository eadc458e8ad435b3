"""Script entry point: regenerate figures from run CSVs.

Usage:
    dmpm-plots energy  OURS.csv BASELINE.csv -o beam_energy.png
    dmpm-plots panels  NOACTION.csv OPT.csv MPPI.csv -c CTL.csv [-c ...] -o panels.png
"""

from __future__ import annotations

import argparse
import sys

from dmpm_plots.figures import plot_damping_panels, plot_energy_comparison
from dmpm_plots.io import SchemaError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dmpm-plots", description="Regenerate figures from dmpm run CSVs"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("energy", help="total-energy comparison (RK4 vs FLIP)")
    p.add_argument("ours_csv")
    p.add_argument("baseline_csv")
    p.add_argument("-o", "--out", default="beam_energy.png")

    p = sub.add_parser("panels", help="2x2 damping panels + control sequences")
    p.add_argument("no_action_csv")
    p.add_argument("optimized_csv")
    p.add_argument("mppi_csv")
    p.add_argument("-c", "--controls", action="append", default=[],
                   metavar="CSV", help="control-sequence CSV (repeatable)")
    p.add_argument("-o", "--out", default="damping_panels.png")
    p.add_argument("--disturbance-end", type=float, default=0.4)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "energy":
            out = plot_energy_comparison(args.ours_csv, args.baseline_csv, args.out)
        else:
            out = plot_damping_panels(
                args.no_action_csv, args.optimized_csv, args.mppi_csv,
                args.controls, args.out, disturbance_end=args.disturbance_end,
            )
        print(f"wrote {out}")
        return 0
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

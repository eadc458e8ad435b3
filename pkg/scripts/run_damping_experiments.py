#!/usr/bin/env python3
"""Rope damping experiments: no-action baseline, gradient-optimized
controls, and the MPPI baseline, across a set of seeds.

Emits record/controls CSVs per run into the artifacts directory. The
optimized and MPPI runs are expensive (minutes to hours on one core), so
each artifact is skipped when its output file already exists; delete files
to force a re-run.
"""

import argparse
import sys
from pathlib import Path

from dmpm.cli import main as cli_main
from dmpm.integrate import rollout
from dmpm.metrics import write_record_csv
from dmpm.scenarios import build_rope


def run_noaction(out: Path) -> None:
    path = out / "noaction_record.csv"
    if path.exists():
        print(f"skip {path} (exists)")
        return
    setup = build_rope()
    rec = rollout(
        setup.state0, setup.mat, setup.grid, setup.bc,
        controls=setup.disturbance, t0=0.0, t1=2.0, dt=setup.dt,
        gravity=setup.gravity, record_every=10,
    )
    write_record_csv(path, rec)
    print(f"wrote {path}")


def run_optimize(out: Path, seed: int) -> int:
    if (out / f"opt{seed}_optimized_record.csv").exists():
        print(f"skip optimize seed {seed} (exists)")
        return 0
    return cli_main([
        "optimize",
        "--set", f"optimizer.seed={seed}",
        "--set", f"output.directory={out}",
        "--set", f"output.prefix=opt{seed}",
    ])


def run_mppi(out: Path, seed: int, K: int) -> int:
    if (out / f"mppi{seed}_mppi_record.csv").exists():
        print(f"skip mppi seed {seed} (exists)")
        return 0
    return cli_main([
        "mppi",
        "--set", f"mppi.seed={seed}",
        "--set", f"mppi.K={K}",
        "--set", f"output.directory={out}",
        "--set", f"output.prefix=mppi{seed}",
    ])


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "artifacts"))
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--mppi-samples", type=int, default=200)
    ap.add_argument("--what", choices=["all", "noaction", "optimize", "mppi"],
                    default="all")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    status = 0
    if args.what in ("all", "noaction"):
        run_noaction(out)
    if args.what in ("all", "optimize"):
        for seed in args.seeds:
            status |= run_optimize(out, seed)
    if args.what in ("all", "mppi"):
        for seed in args.seeds:
            status |= run_mppi(out, seed, args.mppi_samples)
    sys.exit(status)

#!/usr/bin/env python3
"""Gradient verification report: forward-mode gradient vs the
central-difference oracle on random rope control windows."""

import argparse
import sys

import numpy as np

from dmpm.gradient import WindowSpec, gradient_check
from dmpm.scenarios import build_rope

TOL = 1e-4

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--windows", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    setup = build_rope()
    rng = np.random.default_rng(args.seed)
    worst = 0.0
    for k in range(args.windows):
        window = WindowSpec(
            t0=0.4, n_controls=8, hold=setup.config.hold,
            steps_per_hold=setup.steps_per_hold,
        )
        theta = rng.uniform(-0.1, 0.1, window.n_controls)
        rep = gradient_check(
            setup.state0, theta, window, setup.mat, setup.grid, setup.bc,
            setup.gravity,
        )
        worst = max(worst, rep.rel_error)
        print(f"window {k}: rel error {rep.rel_error:.3e}")
    print(f"worst: {worst:.3e} ({'PASS' if worst <= TOL else 'FAIL'} vs {TOL:g})")
    sys.exit(0 if worst <= TOL else 1)

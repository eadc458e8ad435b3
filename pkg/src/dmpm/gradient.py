"""Window cost and its gradient with respect to the ZOH control values.

The cost of a window is the kinetic energy summed over every integrator
step. ``window_grad`` propagates one forward-mode tangent channel per
control slot through the full rollout in a single fused pass;
``fd_oracle`` is the independent central-difference check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from dmpm import _tangent_kernels
from dmpm.engine import _kernel_args, raise_for_status
from dmpm.errors import ConfigurationError
from dmpm.grid import GridSpec
from dmpm.integrate import BoundaryConditionSet, ControlSequence, rollout
from dmpm.materials import MaterialParams
from dmpm.state import ParticleSet


@dataclass(frozen=True)
class WindowSpec:
    """One optimization window: N zero-order-hold control slots of equal
    duration, integrated at a fixed step that divides the hold interval."""

    t0: float
    n_controls: int = 8
    hold: float = 0.05  # s
    steps_per_hold: int = 1

    def __post_init__(self):
        if self.n_controls < 1 or self.steps_per_hold < 1:
            raise ConfigurationError("window needs >= 1 control and >= 1 step/hold")

    @property
    def dt(self) -> float:
        return self.hold / self.steps_per_hold

    @property
    def duration(self) -> float:
        return self.n_controls * self.hold

    @property
    def n_steps(self) -> int:
        return self.n_controls * self.steps_per_hold

    def control_sequence(self, theta: np.ndarray) -> ControlSequence:
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != (self.n_controls,):
            raise ConfigurationError(
                f"expected {self.n_controls} control values, got shape {theta.shape}"
            )
        return ControlSequence(values=theta, hold=self.hold, t_start=self.t0)

    def channel_per_step(self) -> np.ndarray:
        """Index of the control slot active during each integrator step."""
        return np.repeat(np.arange(self.n_controls), self.steps_per_hold).astype(
            np.int64
        )


def window_cost(
    state0: ParticleSet,
    theta: np.ndarray,
    window: WindowSpec,
    mat: MaterialParams,
    grid: GridSpec,
    bc: BoundaryConditionSet,
    gravity=(0.0, 0.0),
) -> tuple[float, ParticleSet]:
    """Primal rollout of one window; returns (cost, end state)."""
    rec = rollout(
        state0, mat, grid, bc,
        controls=window.control_sequence(theta),
        t0=window.t0, t1=window.t0 + window.duration, dt=window.dt,
        gravity=gravity, cost="kinetic", record_every=0,
    )
    return rec.cost, rec.final_state


def window_grad(
    state0: ParticleSet,
    theta: np.ndarray,
    window: WindowSpec,
    mat: MaterialParams,
    grid: GridSpec,
    bc: BoundaryConditionSet,
    gravity=(0.0, 0.0),
) -> tuple[float, np.ndarray, ParticleSet]:
    """Window cost, its gradient w.r.t. theta, and the end state.

    One fused forward pass carrying ``n_controls`` tangent channels.
    """
    theta = np.asarray(theta, dtype=np.float64)
    seq = window.control_sequence(theta)
    u_step = seq.sample_steps(window.t0, window.dt, window.n_steps)
    chan_step = window.channel_per_step()
    out = state0.copy()
    status, fail_step, cost, dcost = _tangent_kernels.window_rollout_jvp(
        out.x, out.v, out.F, out.m, out.V0,
        *_kernel_args(grid, mat, gravity, bc),
        u_step, chan_step, window.n_controls,
        float(window.t0), float(window.dt), window.n_steps,
    )
    raise_for_status(status, f"gradient rollout failed at step {fail_step}")
    return float(cost), dcost, out


def fused_window_cost(
    state0: ParticleSet,
    theta: np.ndarray,
    window: WindowSpec,
    mat: MaterialParams,
    grid: GridSpec,
    bc: BoundaryConditionSet,
    gravity=(0.0, 0.0),
) -> float:
    """Window cost evaluated by the same fused kernel window_grad runs.

    The rollout dynamics amplify last-bit rounding differences between
    arithmetically equal implementations into ~1e-7 state divergence over a
    full window, so a finite-difference probe must difference the exact
    floating-point function whose tangent is propagated. A single inactive
    tangent channel leaves the primal arithmetic untouched.
    """
    seq = window.control_sequence(np.asarray(theta, dtype=np.float64))
    u_step = seq.sample_steps(window.t0, window.dt, window.n_steps)
    out = state0.copy()
    status, fail_step, cost = _tangent_kernels.window_rollout_primal(
        out.x, out.v, out.F, out.m, out.V0,
        *_kernel_args(grid, mat, gravity, bc),
        u_step, float(window.t0), float(window.dt), window.n_steps,
    )
    raise_for_status(status, f"rollout failed at step {fail_step}")
    return float(cost)


def fd_oracle(
    state0: ParticleSet,
    theta: np.ndarray,
    window: WindowSpec,
    mat: MaterialParams,
    grid: GridSpec,
    bc: BoundaryConditionSet,
    gravity=(0.0, 0.0),
    delta: float = 1e-4,
    refine: int = 0,
) -> np.ndarray:
    """Central-difference gradient of the window cost, one slot at a time.

    With ``refine > 0`` each component's step is halved (at most ``refine``
    times) until two successive secants agree to 3e-5 relative. The rollout
    cost carries isolated micro-steps — last-bit branch effects (stencil
    reassignments) amplified by the stiff dynamics — and a secant whose
    bracket straddles one is biased by jump/(2*delta); halving the bracket
    steps around the discontinuity while the smooth part of the secant
    stays put, so agreement across two scales certifies the estimate.
    """

    def secant(k: int, d: float) -> float:
        hi = theta.copy()
        lo = theta.copy()
        hi[k] += d
        lo[k] -= d
        c_hi = fused_window_cost(state0, hi, window, mat, grid, bc, gravity)
        c_lo = fused_window_cost(state0, lo, window, mat, grid, bc, gravity)
        return (c_hi - c_lo) / (2.0 * d)

    theta = np.asarray(theta, dtype=np.float64)
    g = np.zeros_like(theta)
    for k in range(theta.size):
        d = delta
        est = secant(k, d)
        for _ in range(refine):
            finer = secant(k, d / 2.0)
            agreed = abs(finer - est) <= 3e-5 * max(abs(finer), abs(est))
            d /= 2.0
            est = finer
            if agreed:
                break
        g[k] = est
    return g


@dataclass
class GradientReport:
    """Comparison of the forward-mode gradient against the FD oracle."""

    analytic: np.ndarray
    numeric: np.ndarray
    delta: float

    @property
    def rel_error(self) -> float:
        scale = max(
            float(np.linalg.norm(self.analytic)), float(np.linalg.norm(self.numeric))
        )
        if scale == 0.0:
            return 0.0
        return float(np.linalg.norm(self.analytic - self.numeric)) / scale

    @property
    def max_component_rel_error(self) -> float:
        denom = np.maximum(np.abs(self.numeric), 1e-30)
        return float(np.max(np.abs(self.analytic - self.numeric) / denom))


def gradient_check(
    state0: ParticleSet,
    theta: np.ndarray,
    window: WindowSpec,
    mat: MaterialParams,
    grid: GridSpec,
    bc: BoundaryConditionSet,
    gravity=(0.0, 0.0),
    delta: float = 1e-4,
    refine: int = 0,
) -> GradientReport:
    """Run both gradient paths on one window and report the discrepancy."""
    _, analytic, _ = window_grad(state0, theta, window, mat, grid, bc, gravity)
    numeric = fd_oracle(state0, theta, window, mat, grid, bc, gravity, delta, refine)
    return GradientReport(analytic=analytic, numeric=numeric, delta=delta)

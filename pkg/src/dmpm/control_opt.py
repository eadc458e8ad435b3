"""Gradient-based control optimization over sequential windows.

Each window's N zero-order-hold controls are optimized with Adam against
the summed kinetic energy, keeping the best iterate; the window's final
state (under the best controls) seeds the next window.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from dmpm.errors import SimulationError
from dmpm.gradient import WindowSpec, window_cost, window_grad
from dmpm.grid import GridSpec
from dmpm.integrate import BoundaryConditionSet, ControlSequence, RolloutRecord, rollout
from dmpm.materials import MaterialParams
from dmpm.scenarios import RopeSetup
from dmpm.state import ParticleSet


@dataclass
class AdamState:
    """First/second moment accumulators for the Adam update."""

    m: np.ndarray
    v: np.ndarray
    step: int = 0

    @classmethod
    def zeros(cls, n: int) -> "AdamState":
        return cls(m=np.zeros(n), v=np.zeros(n))


@dataclass(frozen=True)
class AdamConfig:
    lr: float = 0.04
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def adam_step(
    theta: np.ndarray, grad: np.ndarray, state: AdamState, cfg: AdamConfig
) -> np.ndarray:
    """One Adam update with bias correction; mutates ``state``, returns new theta."""
    state.step += 1
    state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad
    state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grad * grad
    m_hat = state.m / (1.0 - cfg.beta1**state.step)
    v_hat = state.v / (1.0 - cfg.beta2**state.step)
    return theta - cfg.lr * m_hat / (np.sqrt(v_hat) + cfg.eps)


@dataclass(frozen=True)
class OptimizerConfig:
    n_iters: int = 50
    adam: AdamConfig = field(default_factory=AdamConfig)
    init_scale: float = 0.1  # theta0 ~ U[-init_scale, init_scale]
    clamp: float | None = None  # optional |u| bound applied after each update


@dataclass
class WindowResult:
    theta: np.ndarray  # best iterate
    cost: float
    cost_history: np.ndarray
    end_state: ParticleSet


def optimize_window(
    state0: ParticleSet,
    theta0: np.ndarray,
    window: WindowSpec,
    mat: MaterialParams,
    grid: GridSpec,
    bc: BoundaryConditionSet,
    gravity=(0.0, 0.0),
    cfg: OptimizerConfig | None = None,
) -> WindowResult:
    """Adam on one window's controls, returning the best iterate seen.

    A failed rollout (e.g. an aggressive iterate driving a particle out of
    the grid) skips that iterate rather than aborting the window.
    """
    cfg = cfg or OptimizerConfig()
    theta = np.asarray(theta0, dtype=np.float64).copy()
    adam = AdamState.zeros(theta.size)
    best_theta = theta.copy()
    best_cost = np.inf
    history = []
    for _ in range(cfg.n_iters):
        try:
            cost, grad, _ = window_grad(state0, theta, window, mat, grid, bc, gravity)
        except SimulationError:
            # pull the iterate back toward the best known point (or toward
            # zero control before any success) and try again
            history.append(np.nan)
            anchor = best_theta if np.isfinite(best_cost) else np.zeros_like(theta)
            theta = 0.5 * (theta + anchor)
            continue
        history.append(cost)
        if cost < best_cost:
            best_cost = cost
            best_theta = theta.copy()
        theta = adam_step(theta, grad, adam, cfg.adam)
        if cfg.clamp is not None:
            np.clip(theta, -cfg.clamp, cfg.clamp, out=theta)
    if not np.isfinite(best_cost):
        raise SimulationError("every iterate of the window failed to roll out")
    _, end_state = window_cost(state0, best_theta, window, mat, grid, bc, gravity)
    return WindowResult(
        theta=best_theta, cost=best_cost, cost_history=np.asarray(history),
        end_state=end_state,
    )


@dataclass
class TrajectoryResult:
    controls: ControlSequence  # concatenated best controls over all windows
    window_costs: np.ndarray
    record: RolloutRecord  # full post-disturbance rollout under the controls


def optimize_trajectory(
    setup: RopeSetup,
    t_end: float = 2.0,
    n_windows: int = 4,
    seed: int = 0,
    cfg: OptimizerConfig | None = None,
    record_every: int = 10,
) -> TrajectoryResult:
    """Disturbance phase, then sequential window optimization to ``t_end``.

    The disturbance runs over [0, 0.4] s with zero feedback control; each
    subsequent window is optimized from the previous window's end state.
    """
    cfg = cfg or OptimizerConfig()
    rng = np.random.default_rng(seed)
    dist = setup.disturbance
    t_dist = len(dist.values) * dist.hold
    rec = rollout(
        setup.state0, setup.mat, setup.grid, setup.bc, controls=dist,
        t0=0.0, t1=t_dist, dt=setup.dt, gravity=setup.gravity, record_every=0,
    )
    state = rec.final_state

    window_len = (t_end - t_dist) / n_windows
    hold = setup.config.hold
    n_ctrl = int(round(window_len / hold))
    thetas = []
    costs = []
    for k in range(n_windows):
        window = WindowSpec(
            t0=t_dist + k * window_len, n_controls=n_ctrl, hold=hold,
            steps_per_hold=setup.steps_per_hold,
        )
        theta0 = rng.uniform(-cfg.init_scale, cfg.init_scale, n_ctrl)
        res = optimize_window(
            state, theta0, window, setup.mat, setup.grid, setup.bc,
            setup.gravity, cfg,
        )
        thetas.append(res.theta)
        costs.append(res.cost)
        state = res.end_state

    controls = ControlSequence(
        values=np.concatenate(thetas), hold=hold, t_start=t_dist
    )
    record = rollout(
        setup.state0, setup.mat, setup.grid, setup.bc,
        controls=_with_disturbance(dist, controls),
        t0=0.0, t1=t_end, dt=setup.dt, gravity=setup.gravity,
        record_every=record_every,
    )
    return TrajectoryResult(
        controls=controls, window_costs=np.asarray(costs), record=record
    )


def _with_disturbance(
    dist: ControlSequence, controls: ControlSequence
) -> ControlSequence:
    """Concatenate the disturbance schedule and the damping controls."""
    if abs(dist.hold - controls.hold) > 1e-12:
        raise SimulationError("disturbance and control hold intervals differ")
    return ControlSequence(
        values=np.concatenate([dist.values, controls.values]),
        hold=dist.hold, t_start=dist.t_start,
    )

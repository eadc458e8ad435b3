"""Explicit time integration, boundary conditions, and rollouts."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from dmpm import _kernels
from dmpm.engine import _kernel_args, raise_for_status
from dmpm.errors import ConfigurationError
from dmpm.grid import MASS_EPS, GridSpec
from dmpm.materials import MaterialParams, energies
from dmpm.state import GridScratch, ParticleSet

FREE, FIXED, CONTROL = 0, 1, 2
_MODE_NAMES = {"free": FREE, "fixed": FIXED, "control": CONTROL}

# Default CFL factor for RK4. The linear stability interval of RK4 on the
# imaginary axis is |omega dt| < 2.83; with quadratic B-splines the highest
# grid frequency is ~ pi c / h, so 0.8 keeps |omega dt| ~ 2.5 with margin
# from the kernel's spectral smoothing. The FLIP baseline runs at dt/4.
DEFAULT_CFL = 0.8


@dataclass(frozen=True)
class BoundaryRegion:
    """Static node region with one mode per axis.

    ``predicate(xs, ys)`` receives node coordinate arrays and returns a
    boolean mask. Modes: "free", "fixed" (velocity pinned to zero), or
    "control" (velocity prescribed by the scalar control channel; a
    constant prescribed velocity is a constant ControlSequence).
    """

    predicate: Callable[[np.ndarray, np.ndarray], np.ndarray]
    mode_x: str = "free"
    mode_y: str = "free"


@dataclass
class BoundaryConditionSet:
    """Precomputed per-node, per-axis boundary modes for one grid."""

    grid: GridSpec
    regions: Sequence[BoundaryRegion] = ()
    mode: np.ndarray = field(init=False)  # (nx, ny, 2) int8

    def __post_init__(self):
        nx, ny = self.grid.node_counts
        self.mode = np.zeros((nx, ny, 2), dtype=np.int8)
        xs, ys = self.grid.node_positions()
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        for region in self.regions:
            mask = np.asarray(region.predicate(X, Y), dtype=bool)
            for d, name in enumerate((region.mode_x, region.mode_y)):
                if name not in _MODE_NAMES:
                    raise ConfigurationError(f"unknown boundary mode {name!r}")
                if name != "free":
                    self.mode[mask, d] = _MODE_NAMES[name]

    @property
    def has_control(self) -> bool:
        return bool(np.any(self.mode == CONTROL))


@dataclass
class ControlSequence:
    """Zero-order-hold schedule for the scalar boundary control channel."""

    values: np.ndarray  # m/s
    hold: float  # s
    t_start: float = 0.0
    channel: str = "end_y"

    def __post_init__(self):
        self.values = np.atleast_1d(np.asarray(self.values, dtype=np.float64))
        if self.hold <= 0:
            raise ConfigurationError(f"hold interval must be positive, got {self.hold}")

    def value_at(self, t: float) -> float:
        # small epsilon so step times that land on a hold boundary up to
        # rounding pick the new value; zero outside the schedule's extent
        idx = int(np.floor((t - self.t_start) / self.hold + 1e-9))
        if idx < 0 or idx >= len(self.values):
            return 0.0
        return float(self.values[idx])

    def sample_steps(self, t0: float, dt: float, n_steps: int) -> np.ndarray:
        """Control value applied during each step (evaluated at step start)."""
        return np.array([self.value_at(t0 + s * dt) for s in range(n_steps)])

    @classmethod
    def constant(cls, value: float, hold: float = 1.0, t_start: float = 0.0):
        return cls(values=np.array([value]), hold=hold, t_start=t_start)


@dataclass
class RolloutRecord:
    """Sampled energy/control time series plus accumulated cost."""

    times: np.ndarray  # s
    e_kin: np.ndarray  # J
    e_strain: np.ndarray  # J
    control: np.ndarray  # m/s
    cost: float  # J summed over steps
    n_steps: int
    final_state: ParticleSet

    @property
    def e_total(self) -> np.ndarray:
        return self.e_kin + self.e_strain


def apply_grid_bc(scratch: GridScratch, bc: BoundaryConditionSet, u: float, t: float = 0.0):
    """Enforce boundary modes on nodal velocity and acceleration in place.

    Fixed axes: v = 0, a = 0. Control axes: v = u, a = 0 (ZOH controls have
    zero acceleration inside a hold interval).
    """
    fixed = bc.mode == FIXED
    controlled = bc.mode == CONTROL
    scratch.v[fixed] = 0.0
    scratch.v[controlled] = u
    scratch.a[fixed | controlled] = 0.0
    return scratch


def cfl_dt(grid: GridSpec, mat: MaterialParams, cfl: float = DEFAULT_CFL) -> float:
    """Explicit stable time step from the P-wave CFL bound."""
    return cfl * grid.h / mat.wave_speed


def _require_control(bc, controls) -> None:
    if bc is not None and bc.has_control and controls is None:
        raise ConfigurationError(
            "boundary conditions reference the control channel but no control "
            "value/sequence was provided"
        )


def _as_u_steps(controls, t0, dt, n_steps) -> np.ndarray:
    if controls is None:
        return np.zeros(max(n_steps, 1))
    if isinstance(controls, ControlSequence):
        return controls.sample_steps(t0, dt, max(n_steps, 1))
    return np.full(max(n_steps, 1), float(controls))


def euler_step(
    state: ParticleSet, mat: MaterialParams, grid: GridSpec,
    bc=None, control: float = 0.0, t: float = 0.0, dt: float = 1e-4,
    gravity=(0.0, 0.0),
) -> ParticleSet:
    """Forward Euler step of the ODE form."""
    from dmpm.engine import derivative_eval

    d = derivative_eval(state, mat, grid, bc, control, gravity)
    return ParticleSet(
        x=state.x + dt * d.xdot,
        v=state.v + dt * d.vdot,
        F=state.F + dt * d.Fdot,
        m=state.m,
        V0=state.V0,
    )


def rk4_step(
    state: ParticleSet, mat: MaterialParams, grid: GridSpec,
    bc=None, control: float = 0.0, t: float = 0.0, dt: float = 1e-4,
    gravity=(0.0, 0.0),
) -> ParticleSet:
    """Classical RK4 step; the control is held constant across stages."""
    out = state.copy()
    nx, ny = grid.node_counts
    P = state.count
    ws = [np.zeros((nx, ny)), np.zeros((nx, ny, 2)), np.zeros((nx, ny, 2)),
          np.zeros((nx, ny, 2)), np.zeros((nx, ny, 2))]
    stage = [np.empty((P, 2)), np.empty((P, 2)), np.empty((P, 2, 2)),
             np.empty((P, 2)), np.empty((P, 2)), np.empty((P, 2, 2)),
             np.empty((P, 2)), np.empty((P, 2)), np.empty((P, 2, 2))]
    status = _kernels.rk4_step(
        out.x, out.v, out.F, out.m, out.V0,
        *_kernel_args(grid, mat, gravity, bc), float(control), float(dt),
        *ws, *stage,
    )
    raise_for_status(status, "rk4 step")
    return out


def rollout(
    state0: ParticleSet,
    mat: MaterialParams,
    grid: GridSpec,
    bc=None,
    controls=None,
    t0: float = 0.0,
    t1: float = 1.0,
    dt: float = 1e-4,
    gravity=(0.0, 0.0),
    cost: str | Callable = "kinetic",
    record_every: int = 10,
    method: str = "rk4",
) -> RolloutRecord:
    """Integrate from t0 to t1, accumulating cost and recording energies.

    ``cost`` is "kinetic" (sum over steps of total kinetic energy, the
    active-damping objective) or a callable ``cost(state, u) -> float``
    sampled once per step after the step. ``method`` is "rk4" or
    "flip" (the dissipative baseline stepper).
    """
    span = t1 - t0
    n_steps = int(round(span / dt))
    if n_steps < 0 or abs(n_steps * dt - span) > 1e-9 * max(1.0, abs(span)):
        raise ConfigurationError(
            f"rollout span {span} is not an integer number of steps of {dt}"
        )
    _require_control(bc, controls)
    u_step = _as_u_steps(controls, t0, dt, n_steps)

    if record_every > 0:
        n_rec = 1 + (n_steps // record_every) + (1 if n_steps % record_every else 0)
    else:
        n_rec = 0
    rec_t = np.zeros(max(n_rec, 1))
    rec_ekin = np.zeros(max(n_rec, 1))
    rec_estrain = np.zeros(max(n_rec, 1))
    rec_u = np.zeros(max(n_rec, 1))

    out = state0.copy()
    if method == "rk4":
        kernel = _kernels.rollout
    elif method == "flip":
        kernel = _kernels.flip_rollout
    else:
        raise ConfigurationError(f"unknown integration method {method!r}")

    if callable(cost):
        # generic cost: step through python so the handle sees each state
        total = 0.0
        rec_vals = []
        if record_every > 0:
            rec_vals.append(_sample(out, mat, t0, u_step[0] if n_steps else 0.0))
        for s in range(n_steps):
            u = float(u_step[s])
            if method == "rk4":
                out = rk4_step(out, mat, grid, bc, u, t0 + s * dt, dt, gravity)
            else:
                from dmpm.engine import flip_usl_step

                out = flip_usl_step(out, mat, grid, bc, u, gravity, dt)
            total += float(cost(out, u))
            if record_every > 0 and ((s + 1) % record_every == 0 or s == n_steps - 1):
                rec_vals.append(_sample(out, mat, t0 + (s + 1) * dt, u))
        rec = np.array(rec_vals) if rec_vals else np.zeros((0, 4))
        return RolloutRecord(
            times=rec[:, 0], e_kin=rec[:, 1], e_strain=rec[:, 2], control=rec[:, 3],
            cost=total, n_steps=n_steps, final_state=out,
        )

    if cost != "kinetic":
        raise ConfigurationError(f"unknown cost {cost!r}")
    status, fail_step, total = kernel(
        out.x, out.v, out.F, out.m, out.V0,
        *_kernel_args(grid, mat, gravity, bc),
        u_step, float(t0), float(dt), n_steps,
        int(record_every), rec_t, rec_ekin, rec_estrain, rec_u,
    )
    raise_for_status(status, f"rollout failed at step {fail_step}")
    return RolloutRecord(
        times=rec_t[:n_rec], e_kin=rec_ekin[:n_rec], e_strain=rec_estrain[:n_rec],
        control=rec_u[:n_rec], cost=float(total), n_steps=n_steps, final_state=out,
    )


def _sample(state: ParticleSet, mat: MaterialParams, t: float, u: float):
    e_kin, e_strain, _ = energies(state, mat)
    return (t, e_kin, e_strain, u)

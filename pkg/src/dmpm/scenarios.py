"""Experiment setups: flexing beam (energy conservation) and hanging rope
(active damping), including particle seeding, boundary regions, and the
disturbance schedule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from dmpm.errors import ConfigurationError
from dmpm.grid import GridSpec
from dmpm.integrate import (
    DEFAULT_CFL,
    BoundaryConditionSet,
    BoundaryRegion,
    ControlSequence,
    cfl_dt,
    rollout,
)
from dmpm.materials import MaterialParams
from dmpm.state import ParticleSet

GRAVITY = (0.0, -9.81)

# silicon-rubber-like defaults shared by both experiments
DEFAULT_E = 1.5e6  # Pa
DEFAULT_NU = 0.47
DEFAULT_RHO = 1100.0  # kg/m^3
DEFAULT_DAMPING = 50.0  # Pa s, rope only


def seed_rectangle(
    lo: np.ndarray, size: np.ndarray, grid: GridSpec, rho: float
) -> ParticleSet:
    """Regular 2x2-per-cell particle seeding of an axis-aligned rectangle.

    The rectangle dimensions should be integer multiples of the cell size;
    each particle carries V0 = h^2/4 and mass rho * V0.
    """
    h = grid.h
    ncx = int(round(size[0] / h))
    ncy = int(round(size[1] / h))
    if ncx < 1 or ncy < 1:
        raise ConfigurationError(f"rectangle {size} smaller than one cell")
    offs = np.array([0.25 * h, 0.75 * h])
    xs = lo[0] + h * np.arange(ncx)[:, None] + offs[None, :]
    ys = lo[1] + h * np.arange(ncy)[:, None] + offs[None, :]
    X, Y = np.meshgrid(xs.ravel(), ys.ravel(), indexing="ij")
    x = np.stack([X.ravel(), Y.ravel()], axis=1)
    P = x.shape[0]
    V0 = np.full(P, h * h / 4.0)
    return ParticleSet(
        x=x,
        v=np.zeros((P, 2)),
        F=np.tile(np.eye(2), (P, 1, 1)),
        m=rho * V0,
        V0=V0,
    )


@dataclass
class BeamConfig:
    length: float = 1.0  # m
    height: float = 0.1  # m
    origin: tuple[float, float] = (0.0, 0.0)
    amplitude: float = 0.5  # m/s
    h: float = 0.025  # m
    E: float = DEFAULT_E
    nu: float = DEFAULT_NU
    rho0: float = DEFAULT_RHO
    cfl: float = DEFAULT_CFL


@dataclass
class BeamSetup:
    state0: ParticleSet
    grid: GridSpec
    mat: MaterialParams
    dt: float
    config: BeamConfig


def build_beam(cfg: BeamConfig | None = None) -> BeamSetup:
    """Free-floating beam with the cosine flexing velocity profile.

    No gravity, no damping, no boundary conditions: the total energy is
    conserved by the continuous dynamics, so any loss is numerical.
    """
    cfg = cfg or BeamConfig()
    h = cfg.h
    x0 = np.asarray(cfg.origin, dtype=np.float64)
    margin = 8 * h
    lo = x0 - margin
    hi = x0 + np.array([cfg.length, cfg.height]) + margin
    # extra vertical head/foot room for the flexing + slow drift
    hi[1] += 0.15
    lo[1] -= 0.1
    counts = tuple(int(math.ceil((hi[d] - lo[d]) / h)) + 1 for d in range(2))
    grid = GridSpec(origin=lo, h=h, node_counts=counts)
    mat = MaterialParams(E=cfg.E, nu=cfg.nu, rho0=cfg.rho0)  # zero damping
    state = seed_rectangle(x0, np.array([cfg.length, cfg.height]), grid, cfg.rho0)
    state.v[:, 1] = cfg.amplitude * np.cos(
        2.0 * np.pi * (state.x[:, 0] - x0[0]) / cfg.length
    )
    grid.check_inside(state.x)
    return BeamSetup(state0=state, grid=grid, mat=mat, dt=cfl_dt(grid, mat, cfg.cfl),
                     config=cfg)


@dataclass
class RopeConfig:
    length: float = 1.0  # m
    thickness: float = 0.04  # m
    h: float = 0.02  # m
    E: float = DEFAULT_E
    nu: float = DEFAULT_NU
    rho0: float = DEFAULT_RHO
    lam_d: float = DEFAULT_DAMPING
    mu_d: float = DEFAULT_DAMPING
    cfl: float = DEFAULT_CFL
    hold: float = 0.05  # s, ZOH interval
    disturbance_amplitude: float = 0.9  # m/s
    disturbance_duration: float = 0.4  # s
    relax_duration: float = 12.0  # s
    # vertical grid extents relative to the rope's initial top edge at y=0;
    # sized for the sagging swing plus headroom for control excursions
    y_below: float = 0.6
    y_above: float = 0.44


@dataclass
class RopeSetup:
    state0: ParticleSet  # relaxed hanging steady state
    grid: GridSpec
    mat: MaterialParams
    bc: BoundaryConditionSet
    dt: float  # hold / steps_per_hold
    steps_per_hold: int
    disturbance: ControlSequence
    settled: bool
    config: RopeConfig
    gravity: tuple[float, float] = GRAVITY


def disturbance_sequence(cfg: RopeConfig | None = None) -> ControlSequence:
    """One full sine period of end velocity over the disturbance phase.

    Sampled at the ZOH grid; ends at zero net displacement so the damping
    task starts with the controlled end back at its rest height.
    """
    cfg = cfg or RopeConfig()
    n = int(round(cfg.disturbance_duration / cfg.hold))
    t = cfg.hold * np.arange(n)
    values = cfg.disturbance_amplitude * np.sin(
        2.0 * np.pi * t / cfg.disturbance_duration
    )
    return ControlSequence(values=values, hold=cfg.hold, t_start=0.0)


def relax_to_steady(
    state: ParticleSet,
    mat: MaterialParams,
    grid: GridSpec,
    bc: BoundaryConditionSet,
    duration: float,
    dt: float,
    gravity=GRAVITY,
    e_kin_stop: float = 1e-4,
) -> tuple[ParticleSet, bool]:
    """Settle a state under heavy temporary damping, then zero velocities.

    Returns (settled_state, settled_flag); the flag is False when the
    kinetic energy did not drop below the threshold within ``duration``.
    """
    boosted = mat.with_damping(
        max(10.0 * mat.lam_d, 500.0), max(10.0 * mat.mu_d, 500.0)
    )
    chunk = 0.25
    t = 0.0
    settled = False
    current = state
    while t < duration - 1e-12:
        span = min(chunk, duration - t)
        n = max(1, int(round(span / dt)))
        rec = rollout(
            current, boosted, grid, bc, controls=0.0, t0=t, t1=t + n * dt, dt=dt,
            gravity=gravity, record_every=0,
        )
        current = rec.final_state
        e_kin_end = float(0.5 * np.sum(current.m * np.sum(current.v**2, axis=1)))
        # zeroing the velocities between chunks drains oscillation energy
        # far faster than the viscous damping alone
        current.v[:] = 0.0
        t += n * dt
        if e_kin_end < e_kin_stop:
            settled = True
            break
    return current, settled


def build_rope(cfg: RopeConfig | None = None) -> RopeSetup:
    """Hanging rope, clamped left, right end x-fixed / y-controlled.

    The returned start state is the relaxed hanging steady state under
    zero control.
    """
    cfg = cfg or RopeConfig()
    h = cfg.h
    margin = 4 * h
    lo = np.array([-margin, -cfg.y_below])
    hi = np.array([cfg.length + margin, cfg.y_above])
    counts = tuple(int(math.ceil((hi[d] - lo[d]) / h)) + 1 for d in range(2))
    grid = GridSpec(origin=lo, h=h, node_counts=counts)
    mat = MaterialParams(
        E=cfg.E, nu=cfg.nu, rho0=cfg.rho0, lam_d=cfg.lam_d, mu_d=cfg.mu_d
    )
    state = seed_rectangle(
        np.array([0.0, -cfg.thickness]), np.array([cfg.length, cfg.thickness]),
        grid, cfg.rho0,
    )
    # clamp / control slabs: nodes within the B-spline support (1.5 cells)
    # of the outermost particle columns
    x_left = 0.25 * h  # leftmost particle column
    x_right = cfg.length - 0.25 * h
    eps = 1e-9
    bc = BoundaryConditionSet(
        grid=grid,
        regions=[
            BoundaryRegion(
                predicate=lambda X, Y, cut=x_left + 1.5 * h + eps: X <= cut,
                mode_x="fixed", mode_y="fixed",
            ),
            BoundaryRegion(
                predicate=lambda X, Y, cut=x_right - 1.5 * h - eps: X >= cut,
                mode_x="fixed", mode_y="control",
            ),
        ],
    )
    dt_bound = cfl_dt(grid, mat, cfg.cfl)
    steps_per_hold = int(math.ceil(cfg.hold / dt_bound))
    dt = cfg.hold / steps_per_hold
    relaxed, settled = relax_to_steady(
        state, mat, grid, bc, cfg.relax_duration, dt, GRAVITY
    )
    return RopeSetup(
        state0=relaxed, grid=grid, mat=mat, bc=bc, dt=dt,
        steps_per_hold=steps_per_hold, disturbance=disturbance_sequence(cfg),
        settled=settled, config=cfg,
    )

"""Particle/grid transfer operations and the ODE-form derivative evaluation.

The individual transfer steps (p2g, particle_kinematics, internal_forces)
are vectorized numpy implementations of the operation contracts; the
composed ``derivative_eval`` and the FLIP baseline stepper delegate to the
numba kernels in ``_kernels`` for speed. Both paths use the same particle
ordering for reductions, so they agree to rounding.
"""

from __future__ import annotations

import numpy as np

from dmpm import _kernels
from dmpm.errors import (
    BoundaryViolationError,
    InversionError,
    NumericalFailureError,
    SimulationError,
)
from dmpm.grid import MASS_EPS, GridSpec, bspline_quadratic, bspline_quadratic_deriv
from dmpm.materials import MaterialParams, total_stress
from dmpm.state import GridScratch, ParticleSet, StateDerivative

_STATUS_ERRORS = {
    _kernels.FAIL_NAN: (NumericalFailureError, "non-finite particle state"),
    _kernels.FAIL_INVERTED: (InversionError, "deformation gradient inverted"),
    _kernels.FAIL_OUT_OF_GRID: (BoundaryViolationError, "particle left grid interior"),
}


def raise_for_status(status: int, context: str = "") -> None:
    if status == _kernels.OK:
        return
    exc, msg = _STATUS_ERRORS.get(status, (SimulationError, f"status {status}"))
    raise exc(f"{msg}{': ' + context if context else ''}")


def batched_weights(x: np.ndarray, grid: GridSpec):
    """Stencil bases, weights, and weight gradients for all particles.

    Returns (base (P,2) int, w (P,3,3), grad (P,3,3,2)).
    """
    f = (np.asarray(x) - grid.origin) / grid.h
    base = np.floor(f - 0.5).astype(np.int64)
    offs = np.arange(3)
    rx = f[:, 0, None] - (base[:, 0, None] + offs)  # (P, 3)
    ry = f[:, 1, None] - (base[:, 1, None] + offs)
    nx, ny = bspline_quadratic(rx), bspline_quadratic(ry)
    dx, dy = bspline_quadratic_deriv(rx), bspline_quadratic_deriv(ry)
    w = nx[:, :, None] * ny[:, None, :]
    grad = np.empty(w.shape + (2,))
    grad[..., 0] = dx[:, :, None] * ny[:, None, :] / grid.h
    grad[..., 1] = nx[:, :, None] * dy[:, None, :] / grid.h
    return base, w, grad


def _node_indices(base: np.ndarray):
    offs = np.arange(3)
    gi = base[:, 0, None, None] + offs[None, :, None]  # (P, 3, 3)
    gj = base[:, 1, None, None] + offs[None, None, :]
    return gi, gj


def p2g(particles: ParticleSet, grid: GridSpec) -> GridScratch:
    """Scatter particle mass and momentum to the grid; fill nodal velocity."""
    grid.check_inside(particles.x)
    base, w, _ = batched_weights(particles.x, grid)
    gi, gj = _node_indices(base)
    out = GridScratch.zeros(grid)
    wm = w * particles.m[:, None, None]
    np.add.at(out.m, (gi, gj), wm)
    for d in range(2):
        np.add.at(out.mv[..., d], (gi, gj), wm * particles.v[:, d, None, None])
    active = out.m > MASS_EPS
    out.v[active] = out.mv[active] / out.m[active, None]
    return out


def particle_kinematics(
    scratch: GridScratch, particles: ParticleSet, grid: GridSpec
) -> tuple[np.ndarray, np.ndarray]:
    """Particle position derivative and deformation-gradient derivative.

    xdot_p = sum_I w_Ip v_I; Fdot_p = L_p F_p with the velocity gradient
    L_p = sum_I v_I (grad w_Ip)^T.
    """
    base, w, grad = batched_weights(particles.x, grid)
    gi, gj = _node_indices(base)
    vI = scratch.v[gi, gj]  # (P, 3, 3, 2)
    xdot = np.sum(w[..., None] * vI, axis=(1, 2))
    L = np.einsum("pabi,pabj->pij", vI, grad)
    Fdot = L @ particles.F
    return xdot, Fdot


def internal_forces(
    particles: ParticleSet,
    stresses: np.ndarray,
    body_forces: np.ndarray,
    grid: GridSpec,
) -> np.ndarray:
    """Nodal force field from particle Cauchy stresses and body accelerations.

    f_I = -sum_p V_p sigma_p grad(w_Ip) + sum_p w_Ip m_p b_p with current
    volumes V_p = det(F_p) V0_p.
    """
    detF = particles.det_F()
    if np.any(detF <= 0):
        raise InversionError("det(F) <= 0 in internal force evaluation")
    Vp = detF * particles.V0
    base, w, grad = batched_weights(particles.x, grid)
    gi, gj = _node_indices(base)
    sig_grad = np.einsum("pij,pabj->pabi", stresses, grad)
    contrib = -Vp[:, None, None, None] * sig_grad + (
        w[..., None] * (particles.m[:, None] * body_forces)[:, None, None, :]
    )
    f = np.zeros(grid.node_counts + (2,))
    for d in range(2):
        np.add.at(f[..., d], (gi, gj), contrib[..., d])
    return f


def _kernel_args(grid: GridSpec, mat: MaterialParams, gravity, bc):
    mode = bc.mode if bc is not None else np.zeros(grid.node_counts + (2,), np.int8)
    return (
        grid.origin[0], grid.origin[1], grid.h,
        grid.node_counts[0], grid.node_counts[1],
        mat.lam, mat.mu, mat.lam_d, mat.mu_d,
        float(gravity[0]), float(gravity[1]),
        mode,
    )


def derivative_eval(
    state: ParticleSet,
    mat: MaterialParams,
    grid: GridSpec,
    bc=None,
    control: float = 0.0,
    gravity=(0.0, 0.0),
) -> StateDerivative:
    """Particle state derivative (the right-hand side of the ODE form).

    Pipeline: P2G; grid velocities with boundary conditions; interlaced
    G2P2G (kinematics, stress, nodal forces); grid accelerations with
    boundary conditions; G2P for particle accelerations.
    """
    state.validate(grid)
    nx, ny = grid.node_counts
    P = state.count
    gm = np.zeros((nx, ny))
    gmv = np.zeros((nx, ny, 2))
    gv = np.zeros((nx, ny, 2))
    gf = np.zeros((nx, ny, 2))
    ga = np.zeros((nx, ny, 2))
    xdot = np.empty((P, 2))
    vdot = np.empty((P, 2))
    Fdot = np.empty((P, 2, 2))
    status = _kernels.deriv(
        state.x, state.v, state.F, state.m, state.V0,
        *_kernel_args(grid, mat, gravity, bc), float(control),
        gm, gmv, gv, gf, ga, xdot, vdot, Fdot,
    )
    raise_for_status(status, "derivative evaluation")
    out = StateDerivative(xdot=xdot, vdot=vdot, Fdot=Fdot)
    out.validate()
    return out


def derivative_eval_reference(
    state: ParticleSet,
    mat: MaterialParams,
    grid: GridSpec,
    bc=None,
    control: float = 0.0,
    gravity=(0.0, 0.0),
) -> StateDerivative:
    """Same contract as ``derivative_eval``, composed from the numpy ops.

    Used as a cross-check of the fused kernel.
    """
    from dmpm.integrate import apply_grid_bc

    state.validate(grid)
    scratch = p2g(state, grid)
    if bc is not None:
        apply_grid_bc(scratch, bc, float(control))
    xdot, Fdot = particle_kinematics(scratch, state, grid)
    stresses = total_stress(state.F, Fdot, mat)
    b = np.broadcast_to(np.asarray(gravity, dtype=np.float64), (state.count, 2))
    scratch.f = internal_forces(state, stresses, b, grid)
    active = scratch.m > MASS_EPS
    scratch.a[:] = 0.0
    scratch.a[active] = scratch.f[active] / scratch.m[active, None]
    if bc is not None:
        constrained = scratch.a.copy()
        constrained[bc.mode != 0] = 0.0
        scratch.a = constrained
    base, w, _ = batched_weights(state.x, grid)
    gi, gj = _node_indices(base)
    vdot = np.sum(w[..., None] * scratch.a[gi, gj], axis=(1, 2))
    return StateDerivative(xdot=xdot, vdot=vdot, Fdot=Fdot)


def flip_usl_step(
    state: ParticleSet,
    mat: MaterialParams,
    grid: GridSpec,
    bc=None,
    control: float = 0.0,
    gravity=(0.0, 0.0),
    dt: float = 1e-4,
) -> ParticleSet:
    """Single step of the standard FLIP update-stress-last baseline."""
    state.validate(grid)
    out = state.copy()
    nx, ny = grid.node_counts
    gm = np.zeros((nx, ny))
    gmv = np.zeros((nx, ny, 2))
    gv = np.zeros((nx, ny, 2))
    gf = np.zeros((nx, ny, 2))
    ga = np.zeros((nx, ny, 2))
    status = _kernels.flip_usl_step(
        out.x, out.v, out.F, out.m, out.V0,
        *_kernel_args(grid, mat, gravity, bc), float(control), float(dt),
        gm, gmv, gv, gf, ga,
    )
    raise_for_status(status, "FLIP USL step")
    return out

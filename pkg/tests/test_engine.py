"""Transfer-operator and derivative-evaluation tests: conservation,
uniform-field identities, and agreement between the fused kernel and the
composed numpy reference."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dmpm.engine import (
    derivative_eval,
    derivative_eval_reference,
    flip_usl_step,
    internal_forces,
    p2g,
    particle_kinematics,
)
from dmpm.grid import GridSpec, MASS_EPS
from dmpm.materials import MaterialParams
from dmpm.state import ParticleSet
from conftest import make_blob

GRID = GridSpec(origin=np.array([0.0, 0.0]), h=0.1, node_counts=(14, 14))
MAT = MaterialParams(E=1.5e6, nu=0.47, rho0=1100.0, lam_d=50.0, mu_d=50.0)


def random_state(seed: int) -> ParticleSet:
    return make_blob(GRID, seed=seed, jiggle=0.3)


seeds = st.integers(0, 2**31 - 1)


class TestP2G:
    @given(seeds)
    @settings(max_examples=1000, deadline=None)
    def test_conserves_mass_and_momentum(self, seed):
        state = random_state(seed)
        out = p2g(state, GRID)
        m_tot = state.m.sum()
        mv_tot = (state.m[:, None] * state.v).sum(axis=0)
        assert out.m.sum() == pytest.approx(m_tot, rel=1e-12)
        np.testing.assert_allclose(
            out.mv.sum(axis=(0, 1)), mv_tot,
            atol=1e-12 * max(1.0, np.abs(mv_tot).max()),
        )

    def test_single_particle_on_node(self):
        state = ParticleSet(
            x=np.array([[0.5, 0.5]]), v=np.array([[1.0, 0.0]]),
            F=np.eye(2)[None], m=np.array([1.0]), V0=np.array([1.0]),
        )
        out = p2g(state, GRID)
        assert out.m[5, 5] == pytest.approx(0.5625)
        assert out.mv[5, 5, 0] == pytest.approx(0.5625)
        assert out.mv[5, 5, 1] == 0.0

    def test_velocity_zero_below_mass_cutoff(self):
        state = random_state(0)
        out = p2g(state, GRID)
        assert np.all(out.v[out.m <= MASS_EPS] == 0.0)


class TestKinematics:
    def test_uniform_velocity_is_rigid_translation(self):
        state = make_blob(GRID)
        scratch = p2g(state, GRID)
        c = np.array([0.3, -0.7])
        scratch.v[:] = c
        xdot, Fdot = particle_kinematics(scratch, state, GRID)
        np.testing.assert_allclose(xdot, np.broadcast_to(c, xdot.shape), atol=1e-13)
        np.testing.assert_allclose(Fdot, 0.0, atol=1e-12)

    def test_linear_velocity_field_recovers_gradient(self):
        state = make_blob(GRID)
        scratch = p2g(state, GRID)
        A = np.array([[0.2, -0.5], [0.8, 0.1]])
        xs, ys = GRID.node_positions()
        pos = np.stack(np.meshgrid(xs, ys, indexing="ij"), axis=-1)
        scratch.v = pos @ A.T
        xdot, Fdot = particle_kinematics(scratch, state, GRID)
        np.testing.assert_allclose(xdot, state.x @ A.T, atol=1e-12)
        np.testing.assert_allclose(Fdot, (A[None] @ state.F), atol=1e-10)


class TestInternalForces:
    def test_uniform_stress_nets_zero_force(self):
        state = make_blob(GRID)
        sig = np.tile(np.array([[2.0e3, 0.5e3], [0.5e3, -1.0e3]]), (state.count, 1, 1))
        f = internal_forces(state, sig, np.zeros((state.count, 2)), GRID)
        scale = 2e3 * state.V0.sum() / GRID.h
        assert np.abs(f.sum(axis=(0, 1))).max() <= 1e-9 * scale

    def test_gravity_only_sums_to_total_weight(self):
        state = make_blob(GRID)
        b = np.broadcast_to(np.array([0.0, -9.81]), (state.count, 2))
        f = internal_forces(state, np.zeros((state.count, 2, 2)), b, GRID)
        np.testing.assert_allclose(
            f.sum(axis=(0, 1)), [0.0, -9.81 * state.m.sum()], rtol=1e-12
        )

    def test_no_loads_no_force(self):
        state = make_blob(GRID)
        f = internal_forces(
            state, np.zeros((state.count, 2, 2)), np.zeros((state.count, 2)), GRID
        )
        assert np.all(f == 0.0)


class TestDerivativeEval:
    def test_equilibrium_derivative_is_zero(self):
        state = make_blob(GRID)
        d = derivative_eval(state, MAT, GRID)
        assert np.all(d.xdot == 0.0)
        assert np.all(d.vdot == 0.0)
        assert np.all(d.Fdot == 0.0)

    def test_rigid_translation(self):
        state = make_blob(GRID)
        c = np.array([0.4, -0.2])
        state.v[:] = c
        d = derivative_eval(state, MAT, GRID)
        np.testing.assert_allclose(d.xdot, np.broadcast_to(c, d.xdot.shape), atol=1e-13)
        np.testing.assert_allclose(d.Fdot, 0.0, atol=1e-12)
        np.testing.assert_allclose(d.vdot, 0.0, atol=1e-9)

    @given(seeds)
    @settings(max_examples=100, deadline=None)
    def test_momentum_balance_without_bcs(self, seed):
        # sum m vdot == sum m b: internal forces cancel in the total
        state = random_state(seed)
        gravity = (0.0, -9.81)
        d = derivative_eval(state, MAT, GRID, gravity=gravity)
        got = (state.m[:, None] * d.vdot).sum(axis=0)
        want = state.m.sum() * np.asarray(gravity)
        scale = max(np.abs(want).max(), np.abs(got).max(), 1.0)
        np.testing.assert_allclose(got, want, atol=1e-9 * scale)

    @given(seeds)
    @settings(max_examples=50, deadline=None)
    def test_kernel_matches_numpy_reference(self, seed):
        state = random_state(seed)
        fast = derivative_eval(state, MAT, GRID, gravity=(0.0, -9.81))
        ref = derivative_eval_reference(state, MAT, GRID, gravity=(0.0, -9.81))
        np.testing.assert_allclose(fast.xdot, ref.xdot, rtol=0, atol=1e-12)
        np.testing.assert_allclose(fast.vdot, ref.vdot, rtol=1e-10, atol=1e-7)
        np.testing.assert_allclose(fast.Fdot, ref.Fdot, rtol=1e-10, atol=1e-10)

    def test_pure_function_bit_identical(self):
        state = random_state(7)
        d1 = derivative_eval(state, MAT, GRID, gravity=(0.0, -9.81))
        d2 = derivative_eval(state, MAT, GRID, gravity=(0.0, -9.81))
        assert np.array_equal(d1.xdot, d2.xdot)
        assert np.array_equal(d1.vdot, d2.vdot)
        assert np.array_equal(d1.Fdot, d2.Fdot)


class TestFlipStep:
    def test_equilibrium_unchanged(self):
        state = make_blob(GRID)
        out = flip_usl_step(state, MAT, GRID, dt=1e-4)
        np.testing.assert_allclose(out.x, state.x, atol=1e-14)
        np.testing.assert_allclose(out.v, state.v, atol=1e-12)
        np.testing.assert_allclose(out.F, state.F, atol=1e-14)

    def test_rigid_translation_advects(self):
        state = make_blob(GRID)
        c = np.array([0.3, 0.1])
        state.v[:] = c
        dt = 1e-3
        out = flip_usl_step(state, MAT, GRID, dt=dt)
        np.testing.assert_allclose(out.x, state.x + dt * c, atol=1e-12)
        np.testing.assert_allclose(out.v, state.v, atol=1e-12)
        np.testing.assert_allclose(out.F, state.F, atol=1e-10)

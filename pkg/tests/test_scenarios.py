"""Scenario construction: particle seeding, the beam's flexing profile,
the rope's relaxed hanging state, and the disturbance schedule."""

import numpy as np
import pytest

from dmpm.errors import ConfigurationError
from dmpm.grid import GridSpec
from dmpm.integrate import apply_grid_bc
from dmpm.materials import energies
from dmpm.scenarios import (
    BeamConfig,
    RopeConfig,
    build_beam,
    disturbance_sequence,
    seed_rectangle,
)
from dmpm.state import GridScratch


class TestSeedRectangle:
    GRID = GridSpec(origin=np.array([0.0, 0.0]), h=0.1, node_counts=(12, 12))

    def test_count_and_mass(self):
        state = seed_rectangle(
            np.array([0.2, 0.3]), np.array([0.4, 0.2]), self.GRID, rho=1100.0
        )
        assert state.count == 4 * 2 * 4  # 2x2 particles per cell
        assert state.m.sum() == pytest.approx(1100.0 * 0.4 * 0.2)

    def test_positions_inside_rectangle(self):
        lo = np.array([0.2, 0.3])
        size = np.array([0.3, 0.1])
        state = seed_rectangle(lo, size, self.GRID, rho=1000.0)
        assert np.all(state.x >= lo) and np.all(state.x <= lo + size)

    def test_rest_configuration(self):
        state = seed_rectangle(
            np.array([0.2, 0.2]), np.array([0.2, 0.2]), self.GRID, rho=1000.0
        )
        assert np.all(state.v == 0.0)
        np.testing.assert_array_equal(state.F, np.tile(np.eye(2), (16, 1, 1)))

    def test_subcell_rectangle_rejected(self):
        with pytest.raises(ConfigurationError):
            seed_rectangle(
                np.array([0.2, 0.2]), np.array([0.05, 0.05]), self.GRID, 1000.0
            )


class TestBeam:
    def test_cosine_flexing_profile(self, beam):
        cfg = beam.config
        expected = cfg.amplitude * np.cos(
            2.0 * np.pi * (beam.state0.x[:, 0] - cfg.origin[0]) / cfg.length
        )
        np.testing.assert_allclose(beam.state0.v[:, 1], expected, atol=1e-15)
        assert np.all(beam.state0.v[:, 0] == 0.0)

    def test_zero_net_momentum(self, beam):
        # one full cosine period sampled at uniform offsets sums to zero
        p = (beam.state0.m[:, None] * beam.state0.v).sum(axis=0)
        assert abs(p[1]) <= 1e-9 * (beam.state0.m * beam.config.amplitude).sum()

    def test_initial_energy_split(self, beam):
        e_kin, e_strain, _ = energies(beam.state0, beam.mat)
        assert e_strain == 0.0  # undeformed at t=0
        # mean of A^2 cos^2 over a period is A^2/2
        mass = beam.state0.m.sum()
        assert e_kin == pytest.approx(
            0.25 * mass * beam.config.amplitude**2, rel=1e-6
        )

    def test_custom_resolution(self):
        setup = build_beam(BeamConfig(h=0.05))
        assert setup.grid.h == 0.05
        setup.grid.check_inside(setup.state0.x)


class TestDisturbance:
    def test_schedule_shape(self):
        cfg = RopeConfig()
        seq = disturbance_sequence(cfg)
        assert seq.values.size == 8
        assert seq.hold == cfg.hold
        assert seq.value_at(0.0) == 0.0  # sin starts at zero
        assert seq.value_at(1.0) == 0.0  # released after the disturbance

    def test_zero_net_displacement(self):
        seq = disturbance_sequence(RopeConfig(disturbance_amplitude=2.0))
        assert abs(seq.values.sum() * seq.hold) <= 1e-12

    def test_amplitude_reached(self):
        seq = disturbance_sequence(RopeConfig(disturbance_amplitude=2.0))
        assert seq.values.max() == pytest.approx(2.0)
        assert seq.values.min() == pytest.approx(-2.0)


class TestRope:
    def test_relaxation_settled(self, rope):
        assert rope.settled
        assert np.all(rope.state0.v == 0.0)  # velocities zeroed at the end

    def test_hangs_below_anchors(self, rope):
        # mid-span sags under gravity; the sag is small but clearly resolved
        mid = np.abs(rope.state0.x[:, 0] - 0.5) < 0.1
        sag = -rope.state0.x[mid, 1].max()
        assert 0.01 < sag < 0.3

    def test_ends_held_at_anchor_height(self, rope):
        x = rope.state0.x
        thickness = rope.config.thickness
        for band in (x[:, 0] < 0.03, x[:, 0] > 0.97):
            assert x[band, 1].max() > -thickness
            assert x[band, 1].min() > -2 * thickness

    def test_prestressed_under_gravity(self, rope):
        _, e_strain, _ = energies(rope.state0, rope.mat)
        assert e_strain > 0.1  # the hanging state carries real tension

    def test_dt_divides_hold(self, rope):
        assert rope.steps_per_hold * rope.dt == pytest.approx(
            rope.config.hold, rel=1e-12
        )
        assert rope.dt <= rope.config.cfl * rope.grid.h / rope.mat.wave_speed + 1e-15

    def test_boundary_bands_distinct(self, rope):
        # clamp pins both axes at the left end; control band prescribes
        # the y velocity at the right end
        scratch = GridScratch.zeros(rope.grid)
        scratch.v[:] = 5.0
        apply_grid_bc(scratch, rope.bc, u=1.25)
        X = rope.grid.origin[0] + rope.grid.h * np.arange(rope.grid.node_counts[0])
        left = X <= 0.25 * rope.grid.h + 1.5 * rope.grid.h + 1e-9
        right = X >= 1.0 - 0.25 * rope.grid.h - 1.5 * rope.grid.h - 1e-9
        assert np.all(scratch.v[left] == 0.0)
        assert np.all(scratch.v[right][..., 0] == 0.0)
        assert np.all(scratch.v[right][..., 1] == 1.25)
        interior = ~(left | right)
        assert np.all(scratch.v[interior] == 5.0)

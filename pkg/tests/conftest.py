"""Shared fixtures: scenario setups are expensive (the rope relaxes to its
hanging steady state on construction), so they are session-scoped."""

from pathlib import Path

import numpy as np
import pytest

from dmpm.grid import GridSpec
from dmpm.materials import MaterialParams
from dmpm.scenarios import build_beam, build_rope, seed_rectangle
from dmpm.state import ParticleSet

ARTIFACTS = Path(__file__).resolve().parents[1] / "artifacts"


@pytest.fixture(scope="session")
def rope():
    return build_rope()


@pytest.fixture(scope="session")
def beam():
    return build_beam()


@pytest.fixture(scope="session")
def small_grid():
    return GridSpec(origin=np.array([0.0, 0.0]), h=0.1, node_counts=(12, 12))


@pytest.fixture(scope="session")
def small_mat():
    return MaterialParams(E=1.5e6, nu=0.47, rho0=1100.0)


def make_blob(grid, rho=1100.0, seed=0, jiggle=0.0):
    """Small interior particle blob; optional random perturbation of x/v/F."""
    lo = np.array([grid.origin[0] + 4 * grid.h, grid.origin[1] + 4 * grid.h])
    state = seed_rectangle(lo, np.array([3 * grid.h, 2 * grid.h]), grid, rho)
    if jiggle:
        rng = np.random.default_rng(seed)
        state.x += rng.uniform(-jiggle, jiggle, state.x.shape) * grid.h
        state.v = rng.normal(0.0, 1.0, state.v.shape)
        state.F = state.F + rng.normal(0.0, 0.05, state.F.shape)
    return state


@pytest.fixture()
def blob(small_grid):
    return make_blob(small_grid)


def make_control_rig():
    """Tiny controllable scene for gradient/optimizer tests.

    A small elastic slab whose right edge sits inside the stencil of a
    velocity-controlled node band, so the window cost genuinely depends on
    the control values; cheap enough for dozens of rollouts per test.
    """
    from dmpm.integrate import BoundaryConditionSet, BoundaryRegion

    grid = GridSpec(origin=np.array([0.0, 0.0]), h=0.1, node_counts=(14, 14))
    mat = MaterialParams(E=1.5e6, nu=0.47, rho0=1100.0)
    state = seed_rectangle(
        np.array([0.4, 0.5]), np.array([0.7, 0.2]), grid, mat.rho0
    )
    bc = BoundaryConditionSet(
        grid=grid,
        regions=[BoundaryRegion(lambda X, Y: X > 1.05, "fixed", "control")],
    )
    return state, grid, mat, bc

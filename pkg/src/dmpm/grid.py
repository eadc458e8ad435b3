"""Background grid description and quadratic B-spline interpolation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from dmpm.errors import BoundaryViolationError, ConfigurationError

# Nodes with accumulated mass at or below this carry no velocity or
# acceleration. Zero, deliberately: any positive cutoff makes the node
# velocity snap between 0 and mv/m (an O(particle-velocity) jump whose size
# does not shrink with the cutoff), leaving step discontinuities in rollout
# costs that break finite-difference gradient checks. With the branch at
# exactly zero mass the dynamics is globally continuous. Tiny masses are
# harmless: node velocity mv/m is a convex combination of particle
# velocities (numerator and denominator share the same interpolation
# weights), and particles only ever see node accelerations through the
# same vanishing weights.
MASS_EPS = 0.0


@dataclass(frozen=True)
class GridSpec:
    """Uniform Eulerian grid with square cells.

    Node (i, j) sits at ``origin + h * (i, j)``. Particles must stay at
    least two cells away from the outermost nodes so the 3x3 quadratic
    B-spline stencil never touches the boundary.
    """

    origin: np.ndarray  # (2,) m
    h: float  # cell size, m
    node_counts: tuple[int, int]

    def __post_init__(self):
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=np.float64))
        if self.h <= 0:
            raise ConfigurationError(f"grid spacing must be positive, got {self.h}")
        if min(self.node_counts) < 4:
            raise ConfigurationError(
                f"need at least 4 nodes per axis, got {self.node_counts}"
            )

    @property
    def upper(self) -> np.ndarray:
        return self.origin + self.h * (np.asarray(self.node_counts) - 1)

    def node_positions(self) -> tuple[np.ndarray, np.ndarray]:
        xs = self.origin[0] + self.h * np.arange(self.node_counts[0])
        ys = self.origin[1] + self.h * np.arange(self.node_counts[1])
        return xs, ys

    def interior_margin(self) -> tuple[np.ndarray, np.ndarray]:
        """Lower/upper corner of the region particles may occupy."""
        m = 2.0 * self.h
        return self.origin + m, self.upper - m

    def check_inside(self, x: np.ndarray) -> None:
        lo, hi = self.interior_margin()
        x = np.atleast_2d(x)
        bad = np.any(x < lo, axis=1) | np.any(x > hi, axis=1)
        if np.any(bad):
            p = int(np.argmax(bad))
            raise BoundaryViolationError(
                f"particle {p} at {x[p]} outside grid interior [{lo}, {hi}]"
            )


@dataclass
class ShapeWeights:
    """3x3 interpolation stencil for one particle.

    ``base`` is the index of the lower-left stencil node; ``w[a, b]`` and
    ``grad[a, b]`` are the weight and its spatial gradient for node
    ``base + (a, b)``.
    """

    base: np.ndarray  # (2,) int
    w: np.ndarray  # (3, 3)
    grad: np.ndarray  # (3, 3, 2), 1/m
    node_index: np.ndarray = field(default=None)  # (3, 3, 2) int

    def __post_init__(self):
        if self.node_index is None:
            a = np.arange(3)
            self.node_index = np.stack(
                np.meshgrid(self.base[0] + a, self.base[1] + a, indexing="ij"), axis=-1
            )


def bspline_quadratic(r: np.ndarray) -> np.ndarray:
    """Per-axis quadratic B-spline kernel, r in cell units."""
    r = np.abs(np.asarray(r, dtype=np.float64))
    out = np.zeros_like(r)
    inner = r < 0.5
    outer = (r >= 0.5) & (r < 1.5)
    out[inner] = 0.75 - r[inner] ** 2
    out[outer] = 0.5 * (1.5 - r[outer]) ** 2
    return out


def bspline_quadratic_deriv(r: np.ndarray) -> np.ndarray:
    """Derivative of the per-axis kernel with respect to r."""
    r = np.asarray(r, dtype=np.float64)
    a = np.abs(r)
    out = np.zeros_like(r)
    inner = a < 0.5
    outer = (a >= 0.5) & (a < 1.5)
    out[inner] = -2.0 * r[inner]
    out[outer] = -np.sign(r[outer]) * (1.5 - a[outer])
    return out


def shape_weights(xp: np.ndarray, grid: GridSpec) -> ShapeWeights:
    """Quadratic B-spline tensor-product weights over the 3x3 stencil."""
    xp = np.asarray(xp, dtype=np.float64)
    grid.check_inside(xp)
    f = (xp - grid.origin) / grid.h
    base = np.floor(f - 0.5).astype(np.int64)
    # per-axis offsets of the particle from the three stencil nodes
    rx = f[0] - (base[0] + np.arange(3))
    ry = f[1] - (base[1] + np.arange(3))
    nx, ny = bspline_quadratic(rx), bspline_quadratic(ry)
    dx, dy = bspline_quadratic_deriv(rx), bspline_quadratic_deriv(ry)
    w = np.outer(nx, ny)
    grad = np.empty((3, 3, 2))
    grad[..., 0] = np.outer(dx, ny) / grid.h
    grad[..., 1] = np.outer(nx, dy) / grid.h
    return ShapeWeights(base=base, w=w, grad=grad)

"""Particle and grid state containers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from dmpm.errors import ConfigurationError, InversionError, NumericalFailureError
from dmpm.grid import GridSpec


@dataclass
class ParticleSet:
    """State of the Lagrangian particles (the integrated ODE state).

    Plane strain with unit out-of-plane thickness: V0 is numerically in m^2
    but carries the units of m^3 per meter of depth.
    """

    x: np.ndarray  # (P, 2) positions, m
    v: np.ndarray  # (P, 2) velocities, m/s
    F: np.ndarray  # (P, 2, 2) deformation gradients
    m: np.ndarray  # (P,) masses, kg
    V0: np.ndarray  # (P,) reference volumes, m^3

    def __post_init__(self):
        self.x = np.ascontiguousarray(self.x, dtype=np.float64)
        self.v = np.ascontiguousarray(self.v, dtype=np.float64)
        self.F = np.ascontiguousarray(self.F, dtype=np.float64)
        self.m = np.ascontiguousarray(self.m, dtype=np.float64)
        self.V0 = np.ascontiguousarray(self.V0, dtype=np.float64)
        if np.any(self.m <= 0) or np.any(self.V0 <= 0):
            raise ConfigurationError("particle masses and volumes must be positive")

    @property
    def count(self) -> int:
        return self.x.shape[0]

    def det_F(self) -> np.ndarray:
        F = self.F
        return F[:, 0, 0] * F[:, 1, 1] - F[:, 0, 1] * F[:, 1, 0]

    def validate(self, grid: GridSpec | None = None) -> None:
        """Raise if the state is outside the simulator's admissible set."""
        for name, arr in (("x", self.x), ("v", self.v), ("F", self.F)):
            if not np.all(np.isfinite(arr)):
                raise NumericalFailureError(f"non-finite entries in particle {name}")
        detF = self.det_F()
        if np.any(detF <= 0):
            p = int(np.argmax(detF <= 0))
            raise InversionError(f"particle {p} inverted: det(F) = {detF[p]:.3e}")
        if grid is not None:
            grid.check_inside(self.x)

    def copy(self) -> "ParticleSet":
        return ParticleSet(
            self.x.copy(), self.v.copy(), self.F.copy(), self.m.copy(), self.V0.copy()
        )


@dataclass
class GridScratch:
    """Transient Eulerian node fields, reset for every derivative evaluation."""

    m: np.ndarray  # (nx, ny) kg
    mv: np.ndarray  # (nx, ny, 2) kg m/s
    v: np.ndarray  # (nx, ny, 2) m/s
    f: np.ndarray  # (nx, ny, 2) N
    a: np.ndarray  # (nx, ny, 2) m/s^2

    @classmethod
    def zeros(cls, grid: GridSpec) -> "GridScratch":
        nx, ny = grid.node_counts
        return cls(
            m=np.zeros((nx, ny)),
            mv=np.zeros((nx, ny, 2)),
            v=np.zeros((nx, ny, 2)),
            f=np.zeros((nx, ny, 2)),
            a=np.zeros((nx, ny, 2)),
        )


@dataclass
class StateDerivative:
    """Time derivative of a ParticleSet (output of one derivative evaluation)."""

    xdot: np.ndarray  # (P, 2) m/s
    vdot: np.ndarray  # (P, 2) m/s^2
    Fdot: np.ndarray  # (P, 2, 2) 1/s

    def validate(self) -> None:
        for name, arr in (("xdot", self.xdot), ("vdot", self.vdot), ("Fdot", self.Fdot)):
            if not np.all(np.isfinite(arr)):
                raise NumericalFailureError(f"non-finite entries in {name}")

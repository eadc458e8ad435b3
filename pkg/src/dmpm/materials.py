"""Saint Venant-Kirchhoff hyperelasticity with strain-rate dissipation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from dmpm.errors import ConfigurationError, InversionError


def lame_from_young_poisson(E: float, nu: float) -> tuple[float, float]:
    """Lame parameters from Young's modulus and Poisson ratio (plane strain)."""
    if E <= 0:
        raise ConfigurationError(f"Young's modulus must be positive, got {E}")
    if not 0.0 <= nu < 0.5:
        raise ConfigurationError(f"Poisson ratio must be in [0, 0.5), got {nu}")
    lam = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
    mu = E / (2.0 * (1.0 + nu))
    return lam, mu


@dataclass(frozen=True)
class MaterialParams:
    """Isotropic SVK elasticity plus Kelvin-Voigt-style strain-rate damping."""

    E: float  # Young's modulus, Pa
    nu: float  # Poisson ratio
    rho0: float  # initial density, kg/m^3
    lam_d: float = 0.0  # volumetric damping, Pa s
    mu_d: float = 0.0  # shear damping, Pa s

    def __post_init__(self):
        lame_from_young_poisson(self.E, self.nu)  # validates E, nu
        if self.rho0 <= 0:
            raise ConfigurationError(f"density must be positive, got {self.rho0}")
        if self.lam_d < 0 or self.mu_d < 0:
            raise ConfigurationError("damping parameters must be non-negative")

    @property
    def lam(self) -> float:
        return lame_from_young_poisson(self.E, self.nu)[0]

    @property
    def mu(self) -> float:
        return lame_from_young_poisson(self.E, self.nu)[1]

    @property
    def wave_speed(self) -> float:
        """P-wave speed used for the CFL bound."""
        return float(np.sqrt((self.lam + 2.0 * self.mu) / self.rho0))

    def with_damping(self, lam_d: float, mu_d: float) -> "MaterialParams":
        return MaterialParams(self.E, self.nu, self.rho0, lam_d, mu_d)


def green_strain(F: np.ndarray) -> np.ndarray:
    """Green strain 1/2 (F^T F - I); works on (..., 2, 2) stacks."""
    F = np.asarray(F, dtype=np.float64)
    Ft = np.swapaxes(F, -1, -2)
    eye = np.eye(2)
    return 0.5 * (Ft @ F - eye)


def strain_rate(F: np.ndarray, Fdot: np.ndarray) -> np.ndarray:
    """Time derivative of the Green strain, 1/2 (F^T Fdot + Fdot^T F)."""
    F = np.asarray(F, dtype=np.float64)
    Fdot = np.asarray(Fdot, dtype=np.float64)
    Ft = np.swapaxes(F, -1, -2)
    FdT = np.swapaxes(Fdot, -1, -2)
    return 0.5 * (Ft @ Fdot + FdT @ F)


def _isotropic_stress(strain: np.ndarray, lam: float, mu: float) -> np.ndarray:
    tr = np.trace(strain, axis1=-2, axis2=-1)[..., None, None]
    return lam * tr * np.eye(2) + 2.0 * mu * strain


def total_stress(F: np.ndarray, Fdot: np.ndarray, mat: MaterialParams) -> np.ndarray:
    """Cauchy stress: elastic SVK part plus strain-rate dissipation part.

    Both Piola-Kirchhoff parts are pushed forward with sigma = F P F^T.
    """
    F = np.asarray(F, dtype=np.float64)
    detF = F[..., 0, 0] * F[..., 1, 1] - F[..., 0, 1] * F[..., 1, 0]
    if np.any(detF <= 0):
        raise InversionError("det(F) <= 0 in stress evaluation")
    eps = green_strain(F)
    eps_dot = strain_rate(F, Fdot)
    P = _isotropic_stress(eps, mat.lam, mat.mu) + _isotropic_stress(
        eps_dot, mat.lam_d, mat.mu_d
    )
    Ft = np.swapaxes(F, -1, -2)
    return F @ P @ Ft


def strain_energy_density(eps: np.ndarray, mat: MaterialParams) -> np.ndarray:
    """SVK energy density: psi = lam/2 Tr(eps)^2 + mu eps:eps."""
    tr = np.trace(eps, axis1=-2, axis2=-1)
    frob2 = np.sum(eps * eps, axis=(-2, -1))
    return 0.5 * mat.lam * tr**2 + mat.mu * frob2


def energies(state, mat: MaterialParams) -> tuple[float, float, float]:
    """Kinetic, strain, and total energy of a ParticleSet (J)."""
    e_kin = float(0.5 * np.sum(state.m * np.sum(state.v**2, axis=1)))
    eps = green_strain(state.F)
    e_strain = float(np.sum(state.V0 * strain_energy_density(eps, mat)))
    return e_kin, e_strain, e_kin + e_strain

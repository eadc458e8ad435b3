"""Control-oriented differentiable 2D material point method.

The simulator expresses MPM as a first-order ODE on the particle state
(position, velocity, deformation gradient) and integrates it with explicit
schemes (RK4 by default), which keeps numerical dissipation low enough for
energy-sensitive control tasks. On top of the simulator sit a forward-mode
gradient engine for windowed trajectory optimization and a sampling-based
MPPI baseline controller.
"""

from dmpm.grid import GridSpec, ShapeWeights, shape_weights
from dmpm.state import GridScratch, ParticleSet, StateDerivative
from dmpm.materials import (
    MaterialParams,
    energies,
    green_strain,
    lame_from_young_poisson,
    strain_rate,
    total_stress,
)
from dmpm.integrate import (
    BoundaryConditionSet,
    ControlSequence,
    RolloutRecord,
    euler_step,
    rk4_step,
    rollout,
)
from dmpm.engine import derivative_eval, flip_usl_step
from dmpm.gradient import WindowSpec, fd_oracle, gradient_check, window_cost, window_grad
from dmpm.control_opt import optimize_trajectory, optimize_window
from dmpm.mppi import MPPIConfig, receding_horizon_control
from dmpm.metrics import DampingMetrics, compute_metrics
from dmpm.scenarios import BeamConfig, RopeConfig, build_beam, build_rope

__all__ = [
    "BeamConfig",
    "DampingMetrics",
    "MPPIConfig",
    "RopeConfig",
    "WindowSpec",
    "build_beam",
    "build_rope",
    "compute_metrics",
    "fd_oracle",
    "gradient_check",
    "optimize_trajectory",
    "optimize_window",
    "receding_horizon_control",
    "window_cost",
    "window_grad",
    "BoundaryConditionSet",
    "ControlSequence",
    "GridScratch",
    "GridSpec",
    "MaterialParams",
    "ParticleSet",
    "RolloutRecord",
    "ShapeWeights",
    "StateDerivative",
    "derivative_eval",
    "energies",
    "euler_step",
    "flip_usl_step",
    "green_strain",
    "lame_from_young_poisson",
    "rk4_step",
    "rollout",
    "shape_weights",
    "strain_rate",
    "total_stress",
]

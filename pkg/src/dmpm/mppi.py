"""Sampling-based model-predictive control baseline (MPPI).

At every hold boundary, K perturbed control sequences over an H-hold
horizon are rolled out; the softmin-weighted average becomes the new
nominal sequence, its first hold value is applied, and the plan shifts
forward (receding horizon). The softmin temperature is tuned by a
bracketing line search on the effective weight mass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from dmpm.errors import SimulationError
from dmpm.integrate import ControlSequence, RolloutRecord, rollout
from dmpm.scenarios import RopeSetup
from dmpm.state import ParticleSet

FAILURE_COST = 1e9  # J, assigned to samples whose rollout fails


@dataclass(frozen=True)
class MPPIConfig:
    n_samples: int = 200  # K
    horizon: int = 10  # H holds
    sigma: float = 0.4  # sampling std dev per control slot, m/s
    beta0: float = 10.0  # initial softmin temperature, J
    beta_factor: float = 1.5
    beta_iters: int = 30
    eta_lo_frac: float = 0.05  # valid effective-mass band, fraction of K
    eta_hi_frac: float = 0.7


def sample_controls(
    mean: np.ndarray, sigma: float, n_samples: int, seq: np.random.SeedSequence
) -> np.ndarray:
    """K Gaussian perturbations of the nominal sequence; shape (K, H).

    Each sample draws from its own RNG stream spawned off ``seq`` so the
    result is identical under any evaluation order or parallel schedule.
    """
    out = np.empty((n_samples, mean.size))
    for s, child in enumerate(seq.spawn(n_samples)):
        out[s] = mean + np.random.default_rng(child).normal(0.0, sigma, mean.size)
    return out


def mppi_weights(costs: np.ndarray, beta: float) -> tuple[np.ndarray, float]:
    """Normalized softmin weights, baselined at the best sample.

    Returns (weights, eta) with eta the pre-normalization weight mass
    sum_k exp(-(C_k - min C)/beta); eta is monotone increasing in beta.
    """
    rho = float(np.min(costs))
    w = np.exp(-(costs - rho) / beta)
    eta = float(np.sum(w))
    return w / eta, eta


def line_search_beta(costs: np.ndarray, cfg: MPPIConfig) -> tuple[float, bool]:
    """Scale beta by a constant factor until eta lands inside the target
    band (eta_lo, eta_hi); returns (beta, converged).

    The initial beta is the sampled cost range / 10 (falling back to
    cfg.beta0 for degenerate all-equal costs, where eta = K for every
    beta and the band is unreachable).
    """
    K = costs.size
    lo, hi = cfg.eta_lo_frac * K, cfg.eta_hi_frac * K
    spread = float(np.max(costs) - np.min(costs))
    if spread == 0.0:
        return cfg.beta0, False
    beta = spread / 10.0
    for _ in range(cfg.beta_iters):
        _, eta = mppi_weights(costs, beta)
        if lo < eta < hi:
            return beta, True
        beta = beta * cfg.beta_factor if eta <= lo else beta / cfg.beta_factor
    return beta, False


def mppi_update(
    costs: np.ndarray, samples: np.ndarray, cfg: MPPIConfig
) -> tuple[np.ndarray, float]:
    """Weighted-average plan update; returns (new nominal sequence, beta)."""
    beta, _ = line_search_beta(costs, cfg)
    w, _ = mppi_weights(costs, beta)
    return w @ samples, beta


@dataclass
class MPPIResult:
    controls: ControlSequence  # applied (receding-horizon) controls
    record: RolloutRecord  # full rollout incl. disturbance phase
    betas: np.ndarray  # tuned temperature per MPC step


def receding_horizon_control(
    setup: RopeSetup,
    t_end: float = 2.0,
    seed: int = 0,
    cfg: MPPIConfig | None = None,
    record_every: int = 10,
) -> MPPIResult:
    """Run the MPPI controller from the end of the disturbance to ``t_end``.

    Each sample rollout uses an independent child RNG stream so the result
    is reproducible for a given seed regardless of evaluation order.
    """
    cfg = cfg or MPPIConfig()
    dist = setup.disturbance
    hold = dist.hold
    t_dist = len(dist.values) * hold
    n_holds = int(round((t_end - t_dist) / hold))
    step_seqs = np.random.SeedSequence(seed).spawn(n_holds)

    rec = rollout(
        setup.state0, setup.mat, setup.grid, setup.bc, controls=dist,
        t0=0.0, t1=t_dist, dt=setup.dt, gravity=setup.gravity, record_every=0,
    )
    state = rec.final_state

    mean = np.zeros(cfg.horizon)
    applied = np.zeros(n_holds)
    betas = np.zeros(n_holds)
    for k in range(n_holds):
        t_k = t_dist + k * hold
        samples = sample_controls(mean, cfg.sigma, cfg.n_samples, step_seqs[k])
        costs = np.empty(cfg.n_samples)
        for s in range(cfg.n_samples):
            costs[s] = _sample_cost(state, samples[s], t_k, setup)
        if np.min(costs) >= FAILURE_COST:
            raise SimulationError(f"all MPPI samples failed at t={t_k:.3f}")
        mean, betas[k] = mppi_update(costs, samples, cfg)
        applied[k] = mean[0]
        state = _advance_one_hold(state, applied[k], t_k, setup)
        # receding horizon: shift the plan, pad with zero
        mean = np.append(mean[1:], 0.0)

    controls = ControlSequence(values=applied, hold=hold, t_start=t_dist)
    full = ControlSequence(
        values=np.concatenate([dist.values, applied]), hold=hold, t_start=0.0
    )
    record = rollout(
        setup.state0, setup.mat, setup.grid, setup.bc, controls=full,
        t0=0.0, t1=t_end, dt=setup.dt, gravity=setup.gravity,
        record_every=record_every,
    )
    return MPPIResult(controls=controls, record=record, betas=betas)


def _sample_cost(
    state: ParticleSet, values: np.ndarray, t0: float, setup: RopeSetup
) -> float:
    seq = ControlSequence(values=values, hold=setup.config.hold, t_start=t0)
    try:
        rec = rollout(
            state, setup.mat, setup.grid, setup.bc, controls=seq,
            t0=t0, t1=t0 + values.size * setup.config.hold, dt=setup.dt,
            gravity=setup.gravity, record_every=0,
        )
    except SimulationError:
        return FAILURE_COST
    return rec.cost


def _advance_one_hold(
    state: ParticleSet, u: float, t0: float, setup: RopeSetup
) -> ParticleSet:
    rec = rollout(
        state, setup.mat, setup.grid, setup.bc, controls=float(u),
        t0=t0, t1=t0 + setup.config.hold, dt=setup.dt,
        gravity=setup.gravity, record_every=0,
    )
    return rec.final_state

"""Run configuration: YAML schema with defaults, typo-safe key checking,
and flag overrides. The fully resolved config is echoed into the output
directory so every artifact records how it was produced.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from pathlib import Path

import yaml

from dmpm.errors import ConfigurationError


@dataclass
class ScenarioConfig:
    kind: str = "rope"  # "beam" | "rope"
    length: float = 1.0
    thickness: float = 0.04  # rope
    height: float = 0.1  # beam
    amplitude: float = 0.5  # beam flexing velocity, m/s
    disturbance_amplitude: float = 0.9  # rope, m/s
    relax_duration: float = 12.0  # rope, s


@dataclass
class MaterialConfig:
    E: float = 1.5e6
    nu: float = 0.47
    rho0: float = 1100.0
    lam_d: float = 50.0
    mu_d: float = 50.0


@dataclass
class GridConfig:
    h: float = 0.02


@dataclass
class TimeConfig:
    dt: float | None = None  # explicit step; None derives from CFL
    cfl: float = 0.8
    duration: float = 2.0
    record_every: int = 10


@dataclass
class OptimizerSection:
    lr: float = 0.04
    iterations: int = 50
    seed: int = 0
    clamp: float | None = None
    n_windows: int = 4


@dataclass
class MPPISection:
    K: int = 200
    H: int = 10
    sigma: float = 0.4
    beta: float = 10.0
    eta_min_frac: float = 0.05
    eta_max_frac: float = 0.7
    seed: int = 0


@dataclass
class OutputConfig:
    directory: str = "out"
    prefix: str = "run"


@dataclass
class RunConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    material: MaterialConfig = field(default_factory=MaterialConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    time: TimeConfig = field(default_factory=TimeConfig)
    optimizer: OptimizerSection = field(default_factory=OptimizerSection)
    mppi: MPPISection = field(default_factory=MPPISection)
    output: OutputConfig = field(default_factory=OutputConfig)


def _apply_section(obj, data: dict, section: str):
    known = {f.name for f in fields(obj)}
    for key, value in data.items():
        if key not in known:
            raise ConfigurationError(
                f"unknown key {key!r} in section {section!r} "
                f"(known: {', '.join(sorted(known))})"
            )
        setattr(obj, key, value)


def load_config(path: str | Path | None = None) -> RunConfig:
    """Build a RunConfig from a YAML file, defaulting every omitted key.

    Unknown sections or keys raise ConfigurationError naming the offender.
    """
    cfg = RunConfig()
    if path is None:
        return cfg
    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: top level must be a mapping")
    sections = {f.name: getattr(cfg, f.name) for f in fields(cfg)}
    for name, body in data.items():
        if name not in sections:
            raise ConfigurationError(
                f"unknown config section {name!r} "
                f"(known: {', '.join(sorted(sections))})"
            )
        if body is None:
            continue
        if not isinstance(body, dict):
            raise ConfigurationError(f"section {name!r} must be a mapping")
        _apply_section(sections[name], body, name)
    return cfg


def apply_overrides(cfg: RunConfig, overrides: list[str]) -> RunConfig:
    """Apply ``section.key=value`` overrides (e.g. from CLI flags) in place."""
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigurationError(
                f"override {item!r} is not of the form section.key=value"
            )
        dotted, raw = item.split("=", 1)
        section_name, key = dotted.split(".", 1)
        if not hasattr(cfg, section_name):
            raise ConfigurationError(f"unknown config section {section_name!r}")
        section = getattr(cfg, section_name)
        known = {f.name: f for f in fields(section)}
        if key not in known:
            raise ConfigurationError(
                f"unknown key {key!r} in section {section_name!r}"
            )
        setattr(section, key, yaml.safe_load(raw))
    return cfg


def resolved_dict(cfg: RunConfig) -> dict:
    return dataclasses.asdict(cfg)


def echo_config(cfg: RunConfig, out_dir: str | Path) -> Path:
    """Write the fully resolved configuration next to the run artifacts."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{cfg.output.prefix}_config.yaml"
    with open(path, "w") as fh:
        yaml.safe_dump(resolved_dict(cfg), fh, sort_keys=False)
    return path

"""Scenario configuration and its YAML/JSON loader.

Every section is a closed schema: unknown keys raise instead of being ignored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Callable

import yaml

from ..foabc import VARIANTS, ControllerConfig
from ..fraccalc import TimeGrid
from ..nonsmooth import NonsmoothActuator
from ..plant import EXAMPLE_X0, PRESETS

__all__ = [
    "ConfigError",
    "GridSpec",
    "ReferenceSpec",
    "OutputSpec",
    "ScenarioConfig",
    "load_config",
    "config_from_dict",
    "example_case",
    "EXAMPLE_GAINS",
    "with_horizon",
]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    t0: float = 0.0
    h: float = 1e-3
    horizon: float = 20.0

    def __post_init__(self):
        if not (math.isfinite(self.h) and self.h > 0):
            raise ConfigError(f"grid.h must be positive, got {self.h}")
        if not (math.isfinite(self.horizon) and self.horizon >= self.h):
            raise ConfigError(f"grid.horizon must cover at least one step, got {self.horizon}")

    def to_grid(self) -> TimeGrid:
        return TimeGrid(self.t0, self.h, int(round(self.horizon / self.h)))


@dataclass(frozen=True)
class ReferenceSpec:
    """``sine``: ``amplitude * sin(omega t + phase) + offset``; ``constant``: ``offset``."""

    kind: str = "sine"
    amplitude: float = 1.0
    omega: float = 2.0
    phase: float = 0.0
    offset: float = 0.0

    def __post_init__(self):
        if self.kind not in ("sine", "constant"):
            raise ConfigError(f"reference.kind must be 'sine' or 'constant', got {self.kind!r}")

    def function(self) -> Callable[[float], float]:
        if self.kind == "constant":
            c = float(self.offset)
            return lambda t: c
        A, w, ph, c = self.amplitude, self.omega, self.phase, self.offset
        return lambda t: A * math.sin(w * t + ph) + c


@dataclass(frozen=True)
class OutputSpec:
    csv: str | None = "trajectory.csv"
    metrics: str | None = "metrics.json"


@dataclass(frozen=True)
class ScenarioConfig:
    plant: str = "example-4-1"
    controller: ControllerConfig = None
    actuator: NonsmoothActuator | None = None
    grid: GridSpec = field(default_factory=GridSpec)
    x0: tuple[float, ...] = EXAMPLE_X0
    reference: ReferenceSpec | None = None  # None: the preset's own reference
    disturbance: bool = True
    output: OutputSpec = field(default_factory=OutputSpec)
    seed: int = 0
    name: str = "scenario"

    def __post_init__(self):
        if self.plant not in PRESETS:
            raise ConfigError(f"unknown plant preset {self.plant!r}; known: {sorted(PRESETS)}")
        if self.controller is None:
            raise ConfigError("a controller section is required")
        object.__setattr__(self, "x0", tuple(float(v) for v in self.x0))
        if not all(math.isfinite(v) for v in self.x0):
            raise ConfigError("x0 must be finite")


def _closed(section: str, raw: Any, allowed) -> dict:
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{section} must be a mapping")
    extra = sorted(set(raw) - set(allowed))
    if extra:
        raise ConfigError(f"unknown key(s) in {section}: {', '.join(map(str, extra))}")
    return dict(raw)


def _names(cls) -> list[str]:
    return [f.name for f in fields(cls)]


def config_from_dict(raw: dict) -> ScenarioConfig:
    top = _closed("config", raw, _names(ScenarioConfig))
    ctl = _closed("controller", top.pop("controller", None), _names(ControllerConfig))
    if "variant" not in ctl:
        raise ConfigError(f"controller.variant is required; one of {VARIANTS}")
    try:
        controller = ControllerConfig(**ctl)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"controller: {exc}") from exc
    act = top.pop("actuator", None)
    if act is not None:
        act = _closed("actuator", act, _names(NonsmoothActuator))
        try:
            act = NonsmoothActuator(**act)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"actuator: {exc}") from exc
    grid = GridSpec(**_closed("grid", top.pop("grid", None), _names(GridSpec)))
    ref = top.pop("reference", None)
    if ref is not None:
        ref = ReferenceSpec(**_closed("reference", ref, _names(ReferenceSpec)))
    out = OutputSpec(**_closed("output", top.pop("output", None), _names(OutputSpec)))
    return ScenarioConfig(controller=controller, actuator=act, grid=grid, reference=ref, output=out, **top)


def load_config(path: str | Path) -> ScenarioConfig:
    """Read a scenario from a YAML (or JSON) file."""
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return config_from_dict(raw or {})


EXAMPLE_GAINS = dict(c=(4.0, 4.0, 4.0), a=4.0, sigma=0.8, mu=0.8, beta=0.9, rho=0.9, xi=1.0, Lambda=1.0)


def example_case(example: int, case: int, **overrides) -> ScenarioConfig:
    """Benchmark scenario: ``case`` 1 is the theorem controller, 2 the corollary, 3 the baseline.

    Example 1 knows ``b_bar``; example 2 estimates its inverse with
    ``gamma = 0.9``, ``p0 = 0.01``, ``eta = 1``.
    """
    if example not in (1, 2) or case not in (1, 2, 3):
        raise ConfigError(f"no case {case} for example {example}")
    variant = {1: ("thm1", "cor1", "baseline"), 2: ("thm2", "cor2", "baseline")}[example][case - 1]
    gains = dict(EXAMPLE_GAINS, known_b_bar=example == 1)
    if example == 2:
        gains.update(gamma=0.9, p0=0.01, eta=1.0)
    gains.update(overrides)
    cfg = ScenarioConfig(controller=ControllerConfig(variant, **gains), name=f"example{example}-case{case}")
    return cfg


def with_horizon(cfg: ScenarioConfig, horizon: float) -> ScenarioConfig:
    return replace(cfg, grid=replace(cfg.grid, horizon=horizon))

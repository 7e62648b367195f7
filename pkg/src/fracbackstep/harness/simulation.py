"""Closed-loop simulation of a plant under one controller variant."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from ..foabc import Controller
from ..fraccalc import DivergenceError, IncommensurateStepper
from ..nonsmooth import actuate, saturate
from ..plant import PRESETS, controller_view, normalize, plant_rhs
from .config import ScenarioConfig

__all__ = ["Truth", "SimulationRecord", "ScenarioDivergence", "build_scenario", "simulate", "run_scenario"]


@dataclass(frozen=True)
class Truth:
    """Plant-side quantities the estimator errors are measured against."""

    theta: np.ndarray
    p: float
    D_bar: float


@dataclass
class SimulationRecord:
    """Per-step log. Optional blocks are ``None`` when the variant has no such signal."""

    t: np.ndarray
    x: np.ndarray
    r: np.ndarray
    eps: np.ndarray
    v: np.ndarray
    w: np.ndarray
    u: np.ndarray
    delta_w: np.ndarray
    lam: np.ndarray | None
    theta_hat: np.ndarray
    D_hat: np.ndarray | None
    p_hat: np.ndarray | None
    truth: Truth
    h: float
    variant: str = ""
    p_floor_hits: int = 0

    @property
    def y(self) -> np.ndarray:
        return self.x[:, 0]

    def __len__(self):
        return self.t.size

    def truncated(self, count: int) -> "SimulationRecord":
        arrays = {}
        for f in dataclasses.fields(self):
            val = getattr(self, f.name)
            if isinstance(val, np.ndarray):
                arrays[f.name] = val[:count].copy()
        return dataclasses.replace(self, **arrays)


class ScenarioDivergence(DivergenceError):
    """Divergence inside a scenario; ``last_good`` is the record up to the last finite step."""


def build_scenario(cfg: ScenarioConfig):
    """Instantiate ``(plant, actuator, reference)`` for a config."""
    plant, act, ref = PRESETS[cfg.plant]()
    if cfg.actuator is not None:
        act = cfg.actuator
    if not cfg.disturbance:
        plant = dataclasses.replace(plant, disturbance=lambda t: 0.0, disturbance_bound=0.0)
    if cfg.reference is not None:
        ref = cfg.reference.function()
    if len(cfg.x0) != plant.n:
        raise ValueError(f"x0 has {len(cfg.x0)} entries for a {plant.n}-state plant")
    return plant, act, ref


def simulate(plant, act, reference, ctl_cfg, grid, x0) -> SimulationRecord:
    """Run the loop on ``grid``; one record row per grid point including both ends.

    Per step: read the state, compute ``v``, pass it through saturation
    (``w``) and the full actuator (``u``), log, then advance the controller
    internals and the plant.
    """
    norm = normalize(plant, act)
    view = controller_view(norm, known_b_bar=ctl_cfg.known_b_bar)
    n, q = plant.n, plant.q
    N = grid.n_steps
    h = grid.h
    size = N + 1
    ctl = Controller(ctl_cfg, view, h, capacity=size)
    stepper = IncommensurateStepper(plant.orders, x0, h, capacity=size)

    rec = SimulationRecord(
        t=grid.t0 + h * np.arange(size),
        x=np.zeros((size, n)),
        r=np.zeros(size),
        eps=np.zeros(size),
        v=np.zeros(size),
        w=np.zeros(size),
        u=np.zeros(size),
        delta_w=np.zeros(size),
        lam=np.zeros((size, n)) if ctl.aux is not None else None,
        theta_hat=np.zeros((size, q)),
        D_hat=np.zeros(size) if ctl.est.D_hat is not None else None,
        p_hat=np.zeros(size) if ctl.est.p_hat is not None else None,
        truth=Truth(plant.theta_true.copy(), 1.0 / norm.b_bar, norm.disturbance_bound_bar),
        h=h,
        variant=ctl_cfg.variant,
    )

    x = np.asarray(x0, dtype=float).copy()
    for k in range(size):
        t = rec.t[k]
        r = reference(t)
        sig = ctl.compute(t, x, r)
        if not np.isfinite(sig.v):
            raise ScenarioDivergence(k, "control signal is not finite", last_good=rec.truncated(k))
        w = saturate(sig.v, act)
        rec.x[k] = x
        rec.r[k] = r
        rec.eps[k] = r - x[0]
        rec.v[k] = sig.v
        rec.w[k] = w
        rec.u[k] = actuate(sig.v, act)
        rec.delta_w[k] = w - sig.v
        if rec.lam is not None:
            rec.lam[k] = ctl.lam
        rec.theta_hat[k] = ctl.est.theta_hat
        if rec.D_hat is not None:
            rec.D_hat[k] = ctl.est.D_hat
        if rec.p_hat is not None:
            rec.p_hat[k] = ctl.est.p_hat
        if k == N:
            break
        try:
            ctl.advance(w, sig.v)
            x = stepper.step(plant_rhs(plant, act, t, x, sig.v))
        except FloatingPointError as exc:
            raise ScenarioDivergence(k + 1, str(exc), last_good=rec.truncated(k + 1)) from exc
        if not np.all(np.isfinite(x)):
            raise ScenarioDivergence(k + 1, "plant state", last_good=rec.truncated(k + 1))
    rec.p_floor_hits = ctl.p_floor_hits
    return rec


def run_scenario(cfg: ScenarioConfig):
    """Simulate ``cfg`` and return ``(record, metrics)``."""
    from .metrics import compute_metrics

    plant, act, ref = build_scenario(cfg)
    rec = simulate(plant, act, ref, cfg.controller, cfg.grid.to_grid(), cfg.x0)
    return rec, compute_metrics(rec)

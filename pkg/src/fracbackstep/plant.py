"""Uncertain incommensurate strict-feedback plants and their normalized chain form.

A plant is::

    D^{a_i} x_i = d_i x_{i+1} + psi_i(x_1..x_i) + phi_i(x_1..x_i) . theta,   i < n
    D^{a_n} x_n = b u(v) + psi_n(x) + phi_n(x) . theta + d(t)
    y = x_1

``psi_i`` and ``phi_i`` are called with the state prefix ``x[:i]`` only, which
is what makes the triangular structure hold by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .fraccalc import FractionalOrder
from .nonsmooth import NonsmoothActuator, actuate, dead_zone_disturbance, saturate

__all__ = [
    "StrictFeedbackPlant",
    "NormalizedPlant",
    "ControllerView",
    "normalize",
    "plant_rhs",
    "normalized_rhs",
    "controller_view",
    "example_plant",
    "integrator_chain_plant",
    "EXAMPLE_X0",
    "PRESETS",
]

ScalarFn = Callable[[np.ndarray], float]
VectorFn = Callable[[np.ndarray], Sequence[float]]


@dataclass(frozen=True)
class StrictFeedbackPlant:
    orders: tuple[FractionalOrder, ...]
    gains: tuple[float, ...]
    psi: tuple[ScalarFn, ...]
    phi: tuple[VectorFn, ...]
    theta_true: np.ndarray
    b: float
    disturbance: Callable[[float], float]
    disturbance_bound: float

    def __post_init__(self):
        n = len(self.orders)
        object.__setattr__(self, "orders", tuple(FractionalOrder.of(a) for a in self.orders))
        object.__setattr__(self, "gains", tuple(float(g) for g in self.gains))
        object.__setattr__(self, "theta_true", np.atleast_1d(np.asarray(self.theta_true, dtype=float)))
        if n < 1:
            raise ValueError("plant needs at least one state")
        if len(self.gains) != n - 1:
            raise ValueError(f"expected {n - 1} chain gains, got {len(self.gains)}")
        if len(self.psi) != n or len(self.phi) != n:
            raise ValueError("psi and phi need one entry per state")
        if any(g == 0 for g in self.gains):
            raise ValueError("chain gains d_i must be nonzero")
        if self.b == 0:
            raise ValueError("input coefficient b must be nonzero")

    @property
    def n(self) -> int:
        return len(self.orders)

    @property
    def q(self) -> int:
        return self.theta_true.size

    def psi_at(self, i: int, x: np.ndarray) -> float:
        """``psi_{i+1}`` (zero-based ``i``) evaluated on the state prefix."""
        return float(self.psi[i](x[: i + 1]))

    def phi_at(self, i: int, x: np.ndarray) -> np.ndarray:
        out = np.atleast_1d(np.asarray(self.phi[i](x[: i + 1]), dtype=float))
        if out.size != self.q:
            raise ValueError(f"phi_{i + 1} returned {out.size} entries, expected {self.q}")
        return out


def _deltas(gains: Sequence[float]) -> np.ndarray:
    return np.concatenate([[1.0], np.cumprod(gains)]) if len(gains) else np.array([1.0])


@dataclass(frozen=True)
class NormalizedPlant:
    """Chain form ``x_bar_i = delta_i x_i`` with the input rewritten as ``b_bar w + d_bar``."""

    plant: StrictFeedbackPlant
    act: NonsmoothActuator
    deltas: np.ndarray
    b_prime: float
    b_bar: float
    disturbance_bound_bar: float

    def to_bar(self, x) -> np.ndarray:
        return self.deltas * np.asarray(x, dtype=float)

    def from_bar(self, x_bar) -> np.ndarray:
        return np.asarray(x_bar, dtype=float) / self.deltas

    def psi_bar(self, i: int, x: np.ndarray) -> float:
        return self.deltas[i] * self.plant.psi_at(i, x)

    def phi_bar(self, i: int, x: np.ndarray) -> np.ndarray:
        return self.deltas[i] * self.plant.phi_at(i, x)

    def d_bar(self, t: float, w: float) -> float:
        """Disturbance-like term ``delta_n d(t) + b' d''(w)``."""
        return self.deltas[-1] * self.plant.disturbance(t) + self.b_prime * dead_zone_disturbance(w, self.act)


def normalize(plant: StrictFeedbackPlant, act: NonsmoothActuator) -> NormalizedPlant:
    deltas = _deltas(plant.gains)
    if np.any(deltas == 0):
        raise ValueError("chain gains d_i must be nonzero")
    b_prime = deltas[-1] * plant.b
    b_bar = b_prime * act.m
    bound = abs(deltas[-1]) * plant.disturbance_bound + abs(b_prime) * act.residual_bound
    return NormalizedPlant(plant, act, deltas, float(b_prime), float(b_bar), float(bound))


def _check(value, what: str, index: int):
    if not np.all(np.isfinite(value)):
        raise FloatingPointError(f"{what}_{index + 1} returned a non-finite value")
    return value


def plant_rhs(plant: StrictFeedbackPlant, act: NonsmoothActuator, t: float, x, v: float) -> np.ndarray:
    """Right-hand side of the original plant for desired input ``v``."""
    x = np.asarray(x, dtype=float)
    n = plant.n
    out = np.empty(n)
    for i in range(n):
        psi = _check(plant.psi_at(i, x), "psi", i)
        phi = _check(plant.phi_at(i, x), "phi", i)
        drift = psi + float(phi @ plant.theta_true)
        if i < n - 1:
            out[i] = plant.gains[i] * x[i + 1] + drift
        else:
            out[i] = plant.b * actuate(v, act) + drift + plant.disturbance(t)
    return out


def normalized_rhs(norm: NormalizedPlant, t: float, x_bar, v: float) -> np.ndarray:
    """Right-hand side of the chain form, last line written with ``b_bar w + d_bar``."""
    x_bar = np.asarray(x_bar, dtype=float)
    x = norm.from_bar(x_bar)
    theta = norm.plant.theta_true
    n = x_bar.size
    out = np.empty(n)
    for i in range(n):
        drift = norm.psi_bar(i, x) + float(norm.phi_bar(i, x) @ theta)
        if i < n - 1:
            out[i] = x_bar[i + 1] + drift
        else:
            w = saturate(v, norm.act)
            out[i] = norm.b_bar * w + drift + norm.d_bar(t, w)
    return out


@dataclass(frozen=True)
class ControllerView:
    """What a controller is allowed to know about the plant.

    ``b_bar`` is ``None`` when only its sign may be used.
    """

    orders: tuple[FractionalOrder, ...]
    deltas: np.ndarray
    q: int
    psi_bar: Callable[[int, np.ndarray], float]
    phi_bar: Callable[[int, np.ndarray], np.ndarray]
    sign_b_bar: float
    b_bar: float | None = None

    @property
    def n(self) -> int:
        return len(self.orders)


def controller_view(norm: NormalizedPlant, known_b_bar: bool = True) -> ControllerView:
    # closures over the known functions only; the plant object itself stays out of reach
    psi, phi, q = norm.plant.psi, norm.plant.phi, norm.plant.q
    deltas = norm.deltas.copy()

    def psi_bar(i: int, x: np.ndarray) -> float:
        return deltas[i] * float(psi[i](x[: i + 1]))

    def phi_bar(i: int, x: np.ndarray) -> np.ndarray:
        return deltas[i] * np.atleast_1d(np.asarray(phi[i](x[: i + 1]), dtype=float))

    return ControllerView(
        orders=norm.plant.orders,
        deltas=deltas,
        q=q,
        psi_bar=psi_bar,
        phi_bar=phi_bar,
        sign_b_bar=math.copysign(1.0, norm.b_bar),
        b_bar=norm.b_bar if known_b_bar else None,
    )


EXAMPLE_X0 = (0.3, -0.4, 0.2)


def _example_disturbance(t: float) -> float:
    return math.cos(math.pi * t) + math.sin(3.0 * t)


def example_plant() -> tuple[StrictFeedbackPlant, NonsmoothActuator, Callable[[float], float]]:
    """Three-state benchmark plant with its actuator and ``r(t) = sin(2t)``."""
    plant = StrictFeedbackPlant(
        orders=(0.5, 0.6, 0.7),
        gains=(2.0, -1.0),
        psi=(
            lambda x: -0.5 * x[0] ** 2,
            lambda x: (x[1] - x[1] ** 3) / (1.0 + x[0] ** 4),
            lambda x: -math.exp(-x[0] ** 2) * math.sin(5.0 * x[2]),
        ),
        phi=(
            lambda x: (x[0],),
            lambda x: (-math.sin(x[0]),),
            lambda x: (math.cos(x[0]),),
        ),
        theta_true=np.array([0.1]),
        b=3.0,
        disturbance=_example_disturbance,
        disturbance_bound=2.0,
    )
    act = NonsmoothActuator(m=1.0, U_up=1.8, U_low=-1.5, b_r=0.8, b_l=-0.5)
    return plant, act, lambda t: math.sin(2.0 * t)


def integrator_chain_plant() -> tuple[StrictFeedbackPlant, NonsmoothActuator, Callable[[float], float]]:
    """Drift-free chain with an equilibrium at the origin and ``r = 0``; a sanity preset."""
    plant = StrictFeedbackPlant(
        orders=(0.5, 0.6, 0.7),
        gains=(1.0, 1.0),
        psi=(lambda x: 0.0, lambda x: 0.0, lambda x: 0.0),
        phi=(lambda x: (x[0],), lambda x: (x[1],), lambda x: (x[2],)),
        theta_true=np.array([0.1]),
        b=1.0,
        disturbance=lambda t: 0.0,
        disturbance_bound=0.0,
    )
    act = NonsmoothActuator(m=1.0, U_up=1.8, U_low=-1.5, b_r=0.8, b_l=-0.5)
    return plant, act, lambda t: 0.0


PRESETS = {"example-4-1": example_plant, "integrator-chain": integrator_chain_plant}

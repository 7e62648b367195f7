"""Dead-zone plus saturation actuator, and its two-stage decomposition.

The desired input ``v`` passes a pure saturation to give ``w``; ``w`` passes
the dead zone to give the applied input ``u``. The dead zone is also written
as ``m * w + d''(w)`` with ``d''`` bounded. All functions accept scalars or
numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["NonsmoothActuator", "saturate", "dead_zone", "dead_zone_disturbance", "actuate"]


@dataclass(frozen=True)
class NonsmoothActuator:
    """Slope ``m``, output limits ``U_low < 0 < U_up``, dead band ``b_l < 0 < b_r``."""

    m: float
    U_up: float
    U_low: float
    b_r: float
    b_l: float

    def __post_init__(self):
        vals = (self.m, self.U_up, self.U_low, self.b_r, self.b_l)
        if not all(math.isfinite(x) for x in vals):
            raise ValueError("actuator parameters must be finite")
        if self.m <= 0:
            raise ValueError(f"slope m must be positive, got {self.m}")
        if not self.U_low < 0 < self.U_up:
            raise ValueError("need U_low < 0 < U_up")
        if not self.b_l < 0 < self.b_r:
            raise ValueError("need b_l < 0 < b_r")

    @property
    def w_M(self) -> float:
        return self.U_up / self.m + self.b_r

    @property
    def w_m(self) -> float:
        return self.U_low / self.m + self.b_l

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return (self.w_m, self.b_l, self.b_r, self.w_M)

    @property
    def residual_bound(self) -> float:
        """Upper bound on ``|d''(w)|``."""
        return self.m * max(abs(self.b_r), abs(self.b_l))


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def saturate(v, act: NonsmoothActuator):
    v = np.asarray(v, dtype=float)
    w = np.where(v >= act.w_M, act.w_M, np.where(v < act.w_m, act.w_m, v))
    return _out(w)


def dead_zone(w, act: NonsmoothActuator):
    # written as m*w + d''(w) so that decomposition holds bit for bit
    w = np.asarray(w, dtype=float)
    return _out(act.m * w + np.asarray(dead_zone_disturbance(w, act)))


def dead_zone_disturbance(w, act: NonsmoothActuator):
    """Bounded residual ``d''`` with ``dead_zone(w) == m * w + d''(w)``."""
    w = np.asarray(w, dtype=float)
    d = np.where(w >= act.b_r, -act.m * act.b_r, np.where(w < act.b_l, -act.m * act.b_l, -act.m * w))
    return _out(d)


def actuate(v, act: NonsmoothActuator):
    """Applied input for desired input ``v``, evaluated branch by branch.

    Linear branches use the same arithmetic as :func:`dead_zone`, so
    ``actuate(v) == dead_zone(saturate(v))`` holds exactly whenever the
    corner values ``m*w_M - m*b_r`` and ``m*w_m - m*b_l`` round to the limits.
    """
    v = np.asarray(v, dtype=float)
    u = np.select(
        [
            v >= act.w_M,
            v >= act.b_r,
            v > act.b_l,
            v > act.w_m,
        ],
        [
            act.U_up,
            act.m * v - act.m * act.b_r,
            0.0,
            act.m * v - act.m * act.b_l,
        ],
        default=act.U_low,
    )
    return _out(u)

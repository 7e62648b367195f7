"""Self-check of the numerical building blocks against independent oracles."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import erfcx

from .. import fraccalc
from ..nonsmooth import NonsmoothActuator, actuate, dead_zone, dead_zone_disturbance, saturate
from ..plant import example_plant

__all__ = ["Check", "VerifyReport", "verify", "CHECKS"]


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tol: float
    passed: bool
    relation: str = "<="

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.name}: {self.value:.3e} {self.relation} {self.tol:.1e}"


@dataclass
class VerifyReport:
    checks: list[Check]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def render(self) -> str:
        lines = [c.line() for c in self.checks]
        lines.append(f"{sum(c.passed for c in self.checks)}/{len(self.checks)} checks passed")
        return "\n".join(lines)


def _le(name, value, tol) -> Check:
    return Check(name, float(value), tol, bool(value <= tol))


def _lt(name, value, tol) -> Check:
    return Check(name, float(value), tol, bool(value < tol), "<")


def check_mittag_leffler_oracle() -> list[Check]:
    t = np.linspace(0.0, 5.0, 401)
    series = fraccalc.mittag_leffler(0.5, -np.sqrt(t))
    ref = erfcx(np.sqrt(t))
    return [_le("Mittag-Leffler series vs erfcx, alpha=0.5, rel", np.max(np.abs(series - ref) / ref), 1e-10)]


def check_solver_oracle() -> list[Check]:
    grid = fraccalc.TimeGrid.over(5.0, 1e-3)
    y = fraccalc.solve_fos(lambda t, x: -x, [0.5], [1.0], grid)[:, 0]
    exact = fraccalc.mittag_leffler(0.5, -np.sqrt(grid.times))
    mask = np.abs(exact) > 1e-2
    rel = np.max(np.abs(y[mask] - exact[mask]) / np.abs(exact[mask]))
    return [_le("solver D^0.5 y = -y vs Mittag-Leffler, rel", rel, 1e-3)]


def check_caputo_identities() -> list[Check]:
    h = 1e-3
    t = np.arange(1001) * h
    out = []
    for a in (0.3, 0.5, 0.7):
        const = fraccalc.caputo_diff(np.full(t.size, 3.7), a, h)
        out.append(_lt(f"Caputo of a constant, alpha={a}", np.max(np.abs(const)), 1e-12))
        d1 = fraccalc.caputo_diff(t, a, h)[-1]
        d2 = fraccalc.caputo_diff(t**2, a, h)[-1]
        e1 = 1.0 / math.gamma(2 - a)
        e2 = 2.0 / math.gamma(3 - a)
        out.append(_le(f"Caputo of t at t=1, alpha={a}, rel", abs(d1 - e1) / e1, 1e-2))
        out.append(_le(f"Caputo of t^2 at t=1, alpha={a}, rel", abs(d2 - e2) / e2, 1e-2))
    return out


def check_additivity() -> list[Check]:
    grid = fraccalc.TimeGrid.over(2.0, 1e-3)
    t = grid.times
    out = []
    for label, f in (("t", t), ("t^2", t**2)):
        for p, q in ((0.25, 0.25), (0.3, 0.4)):
            dev = fraccalc.check_additivity(p, q, f, grid)
            out.append(_lt(f"additivity f={label}, p={p}, q={q}", dev, 5e-2))
    return out


def check_diffusive() -> list[Check]:
    h = 1e-3
    t = np.arange(10001) * h
    f = np.sin(t)
    gl = fraccalc.gl_integrate(f, 0.7, h)
    approx = fraccalc.default_diffusive(0.7, n_nodes=60)
    diff = np.zeros(t.size)
    for k in range(1, t.size):
        _, diff[k] = fraccalc.diffusive_step(approx, f[k - 1], h)
    return [_lt("diffusive (60 nodes) vs GL integral of sin, alpha=0.7", np.max(np.abs(diff - gl)), 5e-2)]


def check_nonsmooth(act: NonsmoothActuator | None = None) -> list[Check]:
    if act is None:
        act = example_plant()[1]
    v = np.concatenate([np.linspace(-10.0, 10.0, 100_000), act.breakpoints])
    w = saturate(v, act)
    mismatch1 = np.count_nonzero(actuate(v, act) != dead_zone(w, act))
    mismatch2 = np.count_nonzero(dead_zone(w, act) != act.m * w + dead_zone_disturbance(w, act))
    u = actuate(v, act)
    range_excess = max(0.0, u.max() - act.U_up, act.U_low - u.min())
    return [
        Check("actuate == dead_zone(saturate), mismatches", mismatch1, 0, mismatch1 == 0, "=="),
        Check("dead_zone == m w + d'', mismatches", mismatch2, 0, mismatch2 == 0, "=="),
        _le("max |d''|", np.max(np.abs(dead_zone_disturbance(v, act))), act.residual_bound),
        Check("actuate range excess", range_excess, 0.0, range_excess == 0.0, "=="),
    ]


CHECKS: dict[str, Callable[[], list[Check]]] = {
    "mittag-leffler": check_mittag_leffler_oracle,
    "solver": check_solver_oracle,
    "caputo": check_caputo_identities,
    "additivity": check_additivity,
    "diffusive": check_diffusive,
    "nonsmooth": check_nonsmooth,
}


def verify(only=None) -> VerifyReport:
    """Run the oracle suites; ``only`` restricts to a subset of :data:`CHECKS` keys."""
    checks = []
    for key, fn in CHECKS.items():
        if only is not None and key not in only:
            continue
        try:
            checks.extend(fn())
        except Exception as exc:  # a crashing suite is a failed suite
            checks.append(Check(f"{key}: raised {type(exc).__name__}: {exc}", math.nan, math.nan, False, "!"))
    return VerifyReport(checks)

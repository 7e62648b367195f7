"""Fractional-order adaptive backstepping controllers with saturation compensation.

Four controller variants are provided:

``thm1``
    known ``b_bar``, linear auxiliary system and linear error feedback.
``cor1``
    known ``b_bar``, power-law feedback ``c sgn(e)|e|^sigma`` and power-law
    auxiliary system.
``thm2`` / ``cor2``
    the same laws with ``b_bar`` unknown; ``p_hat`` estimates ``1/b_bar`` and
    the control is ``v = p_hat * v_bar``.
``baseline``
    a plain adaptive backstepping law with no auxiliary system and no
    disturbance-bound estimate, for comparison.

Fractional derivatives of the reference and of the stabilizing functions are
supplied by fractional-order tracking differentiators (:class:`FOTD`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .fraccalc import FractionalOrder, GLStepper, IncommensurateStepper
from .plant import ControllerView

__all__ = [
    "VARIANTS",
    "FOTD",
    "fotd_step",
    "AuxiliarySystem",
    "aux_step",
    "EstimatorState",
    "update_estimates",
    "ControllerConfig",
    "ReferencePack",
    "errors_and_tau",
    "control_law",
    "Controller",
    "tanh_gain",
    "fotd_shape",
]

VARIANTS = ("thm1", "cor1", "thm2", "cor2", "baseline")
P_FLOOR = 1e-6


def tanh_gain(z, gamma: float):
    """``(e^{gz} - e^{-gz}) / (e^{gz} + e^{-gz})``, i.e. ``tanh(gamma * z)``."""
    return np.tanh(gamma * np.asarray(z, dtype=float)) if np.ndim(z) else math.tanh(gamma * z)


def fotd_shape(alpha: float) -> float:
    """``f(alpha) = 1 - Gamma(alpha+1)^2 / Gamma(2 alpha + 1)``."""
    return 1.0 - math.gamma(alpha + 1.0) ** 2 / math.gamma(2.0 * alpha + 1.0)


class FOTD:
    """Fractional-order tracking differentiator.

    ``D^a x1 = x2``, ``D^a x2 = -r1 tanh(x1 - v + x2|x2| f(a) / r1, r2)``.
    ``x1`` follows the input ``v`` and ``x2`` estimates ``D^a v``. If
    ``x1_init`` is left as ``None`` the first input sample seeds ``x1``.
    """

    def __init__(self, order, r1: float = 50.0, r2: float = 5.0, x1_init: float | None = None, capacity: int = 1024):
        if r1 <= 0 or r2 <= 0:
            raise ValueError("FOTD gains r1, r2 must be positive")
        self.order = FractionalOrder.of(order)
        self.r1 = float(r1)
        self.r2 = float(r2)
        self.f_alpha = fotd_shape(self.order.alpha)
        self.x1 = x1_init
        self.x2 = 0.0
        self._capacity = capacity
        self._stepper: GLStepper | None = None

    @property
    def derivative(self) -> float:
        return self.x2

    def control(self, v: float) -> float:
        x1 = v if self.x1 is None else self.x1
        return -self.r1 * math.tanh(self.r2 * (x1 - v + self.x2 * abs(self.x2) / self.r1 * self.f_alpha))

    def step(self, v: float, h: float) -> float:
        if not math.isfinite(v):
            raise ValueError("non-finite FOTD input")
        if self._stepper is None:
            if self.x1 is None:
                self.x1 = float(v)
            self._stepper = GLStepper(self.order, [self.x1, self.x2], h, capacity=self._capacity)
        elif h != self._stepper.h:
            raise ValueError(f"FOTD was started with h={self._stepper.h}, got {h}")
        u = self.control(v)
        self.x1, self.x2 = self._stepper.step([self.x2, u])
        return self.x2


def fotd_step(fotd: FOTD, v_signal: float, h: float) -> tuple[FOTD, float]:
    return fotd, fotd.step(v_signal, h)


def _spow(z, p):
    # sgn(z)|z|^p, continuous at zero for p > 0
    return np.sign(z) * np.abs(z) ** p


@dataclass
class AuxiliarySystem:
    """Compensator chain driven by the saturation mismatch ``delta_w = w - v``."""

    variant: str
    orders: tuple[FractionalOrder, ...]
    c: np.ndarray = None
    a: np.ndarray = None
    mu: np.ndarray = None
    lam: np.ndarray = None
    h: float = 1e-3
    capacity: int = 1024

    def __post_init__(self):
        n = len(self.orders)
        if self.variant not in ("linear", "power"):
            raise ValueError(f"auxiliary variant must be 'linear' or 'power', got {self.variant!r}")
        if self.variant == "linear":
            self.c = np.asarray(self.c, dtype=float)
            if self.c.shape != (n,) or np.any(self.c <= 0):
                raise ValueError("linear auxiliary system needs n positive gains c")
        else:
            self.a = np.asarray(self.a, dtype=float)
            self.mu = np.asarray(self.mu, dtype=float)
            if self.a.shape != (n,) or np.any(self.a <= 0):
                raise ValueError("power auxiliary system needs n positive gains a")
            if self.mu.shape != (n,) or np.any((self.mu <= 0) | (self.mu >= 1)):
                raise ValueError("power exponents mu must lie in (0, 1)")
        self.lam = np.zeros(n) if self.lam is None else np.asarray(self.lam, dtype=float)
        self._stepper = IncommensurateStepper(self.orders, self.lam, self.h, capacity=self.capacity)

    def damping(self, lam: np.ndarray) -> np.ndarray:
        if self.variant == "linear":
            return self.c * lam
        return self.a * _spow(lam, self.mu)

    def drive(self, delta_w: float, input_gain: float) -> np.ndarray:
        lam = self.lam
        chain = np.append(lam[1:], input_gain * delta_w)
        return chain - self.damping(lam)


def aux_step(aux: AuxiliarySystem, delta_w: float, input_gain: float, h: float) -> AuxiliarySystem:
    """One GL step of the auxiliary chain.

    ``input_gain`` is ``b_bar`` when it is known and ``1 / p_hat`` otherwise.
    """
    if h != aux.h:
        raise ValueError(f"auxiliary system runs at h={aux.h}, got {h}")
    if not math.isfinite(input_gain):
        raise ValueError("non-finite auxiliary input gain")
    aux.lam = aux._stepper.step(aux.drive(delta_w, input_gain))
    return aux


@dataclass
class EstimatorState:
    """Fractional-order estimates of ``theta``, the disturbance bound and ``1/b_bar``."""

    theta_hat: np.ndarray
    beta: FractionalOrder
    Lambda: np.ndarray
    D_hat: float | None = None
    rho: FractionalOrder | None = None
    xi: float = 1.0
    p_hat: float | None = None
    gamma: FractionalOrder | None = None
    eta: float = 1.0
    h: float = 1e-3
    capacity: int = 1024

    def __post_init__(self):
        self.theta_hat = np.atleast_1d(np.asarray(self.theta_hat, dtype=float))
        self.Lambda = np.atleast_2d(np.asarray(self.Lambda, dtype=float))
        q = self.theta_hat.size
        if self.Lambda.shape != (q, q):
            raise ValueError(f"Lambda must be {q}x{q}")
        if not np.allclose(self.Lambda, self.Lambda.T) or np.any(np.linalg.eigvalsh(self.Lambda) <= 0):
            raise ValueError("Lambda must be symmetric positive definite")
        self.beta = FractionalOrder.of(self.beta)
        self._theta = GLStepper(self.beta, self.theta_hat, self.h, self.capacity)
        self._D = None
        self._p = None
        if self.D_hat is not None:
            if self.rho is None or self.xi <= 0:
                raise ValueError("the bound estimate needs an order rho and xi > 0")
            self.rho = FractionalOrder.of(self.rho)
            self._D = GLStepper(self.rho, [self.D_hat], self.h, self.capacity)
        if self.p_hat is not None:
            if self.gamma is None or self.eta <= 0:
                raise ValueError("the 1/b_bar estimate needs an order gamma and eta > 0")
            if self.p_hat == 0:
                raise ValueError("p_hat(0) must be nonzero")
            self.gamma = FractionalOrder.of(self.gamma)
            self._p = GLStepper(self.gamma, [self.p_hat], self.h, self.capacity)


def update_estimates(
    est: EstimatorState,
    epsilon: Sequence[float],
    phi_bar_values: Sequence[Sequence[float]],
    w_bar: float | None,
    h: float,
    sign_b_bar: float = 1.0,
) -> EstimatorState:
    """Advance every estimate one GL step of its update law."""
    if h != est.h:
        raise ValueError(f"estimator runs at h={est.h}, got {h}")
    eps = np.asarray(epsilon, dtype=float)
    phis = np.atleast_2d(np.asarray(phi_bar_values, dtype=float))
    est.theta_hat = est._theta.step(est.Lambda @ (eps @ phis))
    if est._D is not None:
        est.D_hat = float(est._D.step([est.xi * abs(eps[-1])])[0])
    if est._p is not None:
        est.p_hat = float(est._p.step([-est.eta * sign_b_bar * eps[-1] * w_bar])[0])
    return est


@dataclass
class ControllerConfig:
    """Gains and orders for one controller variant.

    ``c`` is used by every variant; ``a``, ``sigma`` and ``mu`` only by the
    corollary variants. ``smooth_sign`` selects the ``tanh(., gamma_s)``
    surrogate for ``sgn`` inside the control laws.
    """

    variant: str
    c: Sequence[float]
    a: Sequence[float] | None = None
    sigma: Sequence[float] | None = None
    mu: Sequence[float] | None = None
    beta: float = 0.9
    rho: float = 0.9
    gamma: float = 0.9
    Lambda: float | Sequence[Sequence[float]] = 1.0
    xi: float = 1.0
    eta: float = 1.0
    theta0: float | Sequence[float] = 0.0
    D0: float = 0.0
    p0: float = 0.01
    gamma_s: float = 10.0
    smooth_sign: bool = True
    r1: float = 50.0
    r2: float = 5.0
    known_b_bar: bool = True

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; choose from {VARIANTS}")
        self.c = np.asarray(self.c, dtype=float)
        n = self.c.size
        if self.variant in ("thm2", "cor2"):
            self.known_b_bar = False
        elif self.variant in ("thm1", "cor1"):
            self.known_b_bar = True
        if self.variant in ("thm1", "thm2"):
            floors = np.full(n, 1.0)
            floors[0] = floors[-1] = 0.5
            if np.any(self.c <= floors):
                raise ValueError(f"{self.variant} needs c_1, c_n > 0.5 and c_i > 1 otherwise, got {self.c.tolist()}")
        elif np.any(self.c <= 0):
            raise ValueError("gains c must be positive")
        if self.is_power:
            for name in ("a", "sigma", "mu"):
                val = getattr(self, name)
                if val is None:
                    raise ValueError(f"{self.variant} needs {name}")
                val = np.broadcast_to(np.asarray(val, dtype=float), (n,)).copy()
                setattr(self, name, val)
            if np.any(self.a <= 0):
                raise ValueError("gains a must be positive")
            for name in ("sigma", "mu"):
                val = getattr(self, name)
                if np.any((val <= 0) | (val >= 1)):
                    raise ValueError(f"{name} must lie in (0, 1)")
        for name in ("beta", "rho", "gamma"):
            FractionalOrder.of(getattr(self, name))
        if self.xi <= 0 or self.eta <= 0 or self.gamma_s <= 0:
            raise ValueError("xi, eta and gamma_s must be positive")
        if self.p0 == 0:
            raise ValueError("p0 must be nonzero")

    @property
    def n(self) -> int:
        return self.c.size

    @property
    def is_power(self) -> bool:
        return self.variant in ("cor1", "cor2")

    @property
    def uses_p_hat(self) -> bool:
        return not self.known_b_bar

    @property
    def uses_aux(self) -> bool:
        return self.variant != "baseline"

    @property
    def uses_D_hat(self) -> bool:
        return self.variant != "baseline"

    def sign(self, z: float) -> float:
        return math.tanh(self.gamma_s * z) if self.smooth_sign else float(np.sign(z))


@dataclass
class ReferencePack:
    """``r`` and ``derivs[i] = D^{alpha_1 + ... + alpha_{i+1}} r``."""

    r: float
    derivs: np.ndarray


def _feedback(cfg: ControllerConfig, i: int, e: float) -> float:
    if cfg.is_power:
        return cfg.c[i] * cfg.sign(e) * abs(e) ** cfg.sigma[i]
    return cfg.c[i] * e


def errors_and_tau(
    cfg: ControllerConfig,
    view: ControllerView,
    x: np.ndarray,
    ref: ReferencePack,
    lam: np.ndarray,
    theta_hat: np.ndarray,
    tau_derivs: Sequence[float],
) -> tuple[np.ndarray, np.ndarray]:
    """Error variables and stabilizing functions at the current instant.

    ``tau_derivs[i]`` is the current estimate of ``D^{alpha_{i+2}} tau_{i+1}``
    (zero-based: the derivative of ``tau[i]`` of order ``alpha[i+1]``).
    """
    n = view.n
    x_bar = view.deltas * x
    eps = np.empty(n)
    tau = np.empty(n - 1)
    for i in range(n):
        if i == 0:
            base = x_bar[0] - ref.r
        else:
            base = x_bar[i] - ref.derivs[i - 1] - tau[i - 1]
        eps[i] = base - lam[i]
        if i == n - 1:
            break
        known = view.psi_bar(i, x) + float(view.phi_bar(i, x) @ theta_hat)
        t = -known + (tau_derivs[i - 1] if i > 0 else 0.0)
        if cfg.is_power:
            t -= _feedback(cfg, i, eps[i]) + cfg.a[i] * _spow(lam[i], cfg.mu[i])
            if i > 0:
                t -= eps[i - 1]
        else:
            # c_i (x_bar_i - ...) so the lambda terms cancel in the error dynamics
            t -= cfg.c[i] * base
        tau[i] = t
    return eps, tau


def control_law(
    cfg: ControllerConfig,
    view: ControllerView,
    x: np.ndarray,
    eps: np.ndarray,
    tau_derivs: Sequence[float],
    ref: ReferencePack,
    lam: np.ndarray,
    theta_hat: np.ndarray,
    D_hat: float | None,
    p_hat: float | None = None,
) -> tuple[float, float]:
    """Desired input ``v`` and the bracket ``v_bar`` (``v = v_bar / b_bar`` or ``p_hat v_bar``)."""
    n = view.n
    en = eps[-1]
    bracket = ref.derivs[n - 1] - view.psi_bar(n - 1, x) - float(view.phi_bar(n - 1, x) @ theta_hat)
    if n > 1:
        bracket += tau_derivs[n - 2]
    if D_hat is not None:
        bracket -= cfg.sign(en) * D_hat
    if cfg.is_power:
        bracket -= _feedback(cfg, n - 1, en) + cfg.a[n - 1] * _spow(lam[n - 1], cfg.mu[n - 1])
        if n > 1:
            bracket -= eps[n - 2]
    else:
        bracket -= cfg.c[n - 1] * en + cfg.c[n - 1] * lam[n - 1]
    if cfg.known_b_bar:
        if view.b_bar is None:
            raise ValueError(f"{cfg.variant} needs a known b_bar")
        return bracket / view.b_bar, bracket
    if p_hat is None:
        raise ValueError(f"{cfg.variant} needs p_hat")
    return p_hat * bracket, bracket


@dataclass
class ControlSignals:
    v: float
    v_bar: float
    eps: np.ndarray
    tau: np.ndarray
    ref: ReferencePack
    p_used: float | None = None


class Controller:
    """Stateful controller instance; drive with :meth:`compute` then :meth:`advance` each step."""

    def __init__(self, cfg: ControllerConfig, view: ControllerView, h: float, capacity: int = 1024):
        if cfg.n != view.n:
            raise ValueError(f"config has {cfg.n} gains for a {view.n}-state plant")
        if cfg.known_b_bar and view.b_bar is None:
            raise ValueError(f"{cfg.variant} needs a known b_bar but the plant view hides it")
        self.cfg = cfg
        self.view = view
        self.h = h
        n = view.n
        orders = view.orders
        self.ref_fotd = [FOTD(orders[i], cfg.r1, cfg.r2, capacity=capacity) for i in range(n)]
        self.tau_fotd = [FOTD(orders[i + 1], cfg.r1, cfg.r2, capacity=capacity) for i in range(n - 1)]
        self.aux = None
        if cfg.uses_aux:
            if cfg.is_power:
                self.aux = AuxiliarySystem("power", orders, a=cfg.a, mu=cfg.mu, h=h, capacity=capacity)
            else:
                self.aux = AuxiliarySystem("linear", orders, c=cfg.c, h=h, capacity=capacity)
        theta0 = np.broadcast_to(np.asarray(cfg.theta0, dtype=float), (view.q,)).copy()
        Lam = np.asarray(cfg.Lambda, dtype=float)
        if Lam.ndim == 0:
            Lam = Lam * np.eye(view.q)
        self.est = EstimatorState(
            theta_hat=theta0,
            beta=cfg.beta,
            Lambda=Lam,
            D_hat=cfg.D0 if cfg.uses_D_hat else None,
            rho=cfg.rho,
            xi=cfg.xi,
            p_hat=cfg.p0 if cfg.uses_p_hat else None,
            gamma=cfg.gamma,
            eta=cfg.eta,
            h=h,
            capacity=capacity,
        )
        self.p_floor_hits = 0
        self._last: ControlSignals | None = None
        self._x = None

    @property
    def lam(self) -> np.ndarray:
        return self.aux.lam.copy() if self.aux is not None else np.zeros(self.view.n)

    def _reference(self, r: float) -> ReferencePack:
        derivs = np.empty(self.view.n)
        for i, f in enumerate(self.ref_fotd):
            derivs[i] = f.derivative
        return ReferencePack(r, derivs)

    def _p_effective(self) -> float | None:
        p = self.est.p_hat
        if p is None:
            return None
        if abs(p) < P_FLOOR:
            self.p_floor_hits += 1
            return math.copysign(P_FLOOR, p) if p != 0 else P_FLOOR
        return p

    def compute(self, t: float, x, r: float) -> ControlSignals:
        x = np.asarray(x, dtype=float)
        ref = self._reference(r)
        tau_d = [f.derivative for f in self.tau_fotd]
        lam = self.lam
        eps, tau = errors_and_tau(self.cfg, self.view, x, ref, lam, self.est.theta_hat, tau_d)
        p = self._p_effective()
        v, v_bar = control_law(self.cfg, self.view, x, eps, tau_d, ref, lam, self.est.theta_hat, self.est.D_hat, p)
        self._last = ControlSignals(v, v_bar, eps, tau, ref, p)
        self._x = x
        return self._last

    def advance(self, w: float, v: float) -> None:
        """Step the auxiliary chain, estimators and differentiators using the last :meth:`compute`."""
        sig = self._last
        if sig is None:
            raise RuntimeError("compute() must run before advance()")
        h = self.h
        x = self._x
        n = self.view.n
        if self.aux is not None:
            gain = self.view.b_bar if self.cfg.known_b_bar else 1.0 / sig.p_used
            aux_step(self.aux, w - v, gain, h)
        w_bar = None
        if self.est.p_hat is not None:
            # w = p_hat * w_bar; a controller unaware of saturation takes w = v
            w_bar = (w if self.aux is not None else v) / sig.p_used
        phis = [self.view.phi_bar(i, x) for i in range(n)]
        update_estimates(self.est, sig.eps, phis, w_bar, h, self.view.sign_b_bar)
        signal = sig.ref.r
        for f in self.ref_fotd:
            nxt = f.derivative
            f.step(signal, h)
            signal = nxt
        for f, tau_i in zip(self.tau_fotd, sig.tau):
            f.step(tau_i, h)
        self._last = None

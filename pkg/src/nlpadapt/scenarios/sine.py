"""Pendulum-like plant ``x2' = sin(theta*x1) + u`` with locally monotone parametrization.

The sign of d/dtheta sin(theta*x1) is fixed only on bands of ``x1``; the
estimator adapts inside those bands and holds its integral state outside.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import ClosedLoop, ExpDecay, GoalFunction, Parametrization, Plant, linear_target


@dataclass(frozen=True)
class OmegaM:
    """Bands of ``x1`` with the sign of the monotone direction on each."""

    intervals: tuple = ((-3.38, -2.59), (-1.14, 1.14), (2.59, 3.38))
    signs: tuple = (-1.0, 1.0, -1.0)

    def __post_init__(self):
        if len(self.intervals) != len(self.signs):
            raise ValueError("one sign per interval")
        flat = [v for iv in self.intervals for v in iv]
        if any(b <= a for a, b in zip(flat, flat[1:])):
            raise ValueError("intervals must be ordered and disjoint")
        lo = sorted(-b for _, b in self.intervals)
        if not np.allclose(lo, [a for a, _ in self.intervals]):
            raise ValueError("intervals must be symmetric about 0")

    def which(self, x1) -> int | None:
        for k, (a, b) in enumerate(self.intervals):
            if a <= x1 <= b:
                return k
        return None

    def contains(self, x1) -> bool:
        return self.which(x1) is not None

    def alpha(self, x1) -> float:
        k = self.which(x1)
        return 0.0 if k is None else self.signs[k] * x1

    def dalpha(self, x1) -> float:
        k = self.which(x1)
        return 0.0 if k is None else self.signs[k]


def certified_omega_m(lo=0.6, hi=1.4) -> OmegaM:
    """Exact bands on which cos(theta*x1) keeps one sign for all theta in [lo, hi]."""
    inner = math.pi / (2 * hi)
    a, b = math.pi / (2 * lo), 3 * math.pi / (2 * hi)
    return OmegaM(((-b, -a), (-inner, inner), (a, b)), (-1.0, 1.0, -1.0))


@dataclass(frozen=True)
class SineConfig:
    lam: float = 1.0
    theta: float = 1.0
    theta_hat0: float = 0.6
    gamma: float = 1.0
    rate: float = 1.0
    amp: float = 0.8
    omega: float = 1.0
    x1_0: float = 0.0
    x2_0: float = 0.0
    theta_lo: float = 0.6
    theta_hi: float = 1.4
    x1_reach: float = 1.0
    eps_amp: float = 0.0
    eps_rate: float = 1.0
    h: float = 1e-3
    tf: float = 40.0

    def __post_init__(self):
        if not self.theta_lo <= self.theta <= self.theta_hi:
            raise ValueError("theta outside its domain")
        if not self.lam > 0 or not self.gamma > 0:
            raise ValueError("lam and gamma must be positive")


def sine_rhs(x, theta, u):
    return np.array([x[1], math.sin(theta * x[0]) + u])


def reference(cfg: SineConfig, t):
    """Reference ``amp*sin(omega t)`` and its first two derivatives."""
    a, w = cfg.amp, cfg.omega
    s, c = math.sin(w * t), math.cos(w * t)
    return a * s, a * w * c, -a * w * w * s


def plant(cfg: SineConfig) -> Plant:
    return Plant(
        f1=lambda x: np.array([x[1]]),
        f2=lambda x, th: np.array([math.sin(float(np.atleast_1d(th)[0]) * x[0])]),
        g1=lambda x: np.zeros(1),
        g2=lambda x: np.ones(1),
        theta_true=[cfg.theta],
        theta_domain=([cfg.theta_lo], [cfg.theta_hi]),
        q=1,
    )


def goal(cfg: SineConfig) -> GoalFunction:
    lam = cfg.lam
    grad = np.array([1.0, lam])

    def psi(x, t):
        r, rd, _ = reference(cfg, t)
        return (x[0] - r) + lam * (x[1] - rd)

    def dt(x, t):
        _, rd, rdd = reference(cfg, t)
        return -rd - lam * rdd

    return GoalFunction(psi=psi, grad_x=lambda x, t: grad, dt=dt)


def growth_constants(cfg: SineConfig):
    """``D`` and ``D1`` for ``lam*sin(theta*x1)`` along ``alpha = x1`` with |x1| <= x1_reach."""
    worst = cfg.theta_hi * cfg.x1_reach
    if worst >= math.pi / 2:
        raise ValueError("x1_reach leaves the band where the parametrization is monotone")
    return cfg.lam, cfg.lam * math.cos(worst)


def parametrization(cfg: SineConfig, omega_m: OmegaM = OmegaM()) -> Parametrization:
    lam = cfg.lam
    D, D1 = growth_constants(cfg)

    def f(x, th, t):
        return x[1] + lam * math.sin(float(np.atleast_1d(th)[0]) * x[0])

    return Parametrization(
        f=f,
        alpha=lambda x, t: np.array([omega_m.alpha(x[0])]),
        D=D,
        D1=D1,
        q=1,
        dalpha_dx=lambda x, t: np.array([[omega_m.dalpha(x[0]), 0.0]]),
        dalpha_dt=lambda x, t: np.zeros(1),
        active=lambda x, t: omega_m.contains(x[0]),
    )


def build(cfg: SineConfig = SineConfig(), omega_m: OmegaM = OmegaM()) -> ClosedLoop:
    return ClosedLoop(
        plant=plant(cfg),
        goal=goal(cfg),
        target=linear_target(cfg.rate),
        parm=parametrization(cfg, omega_m),
        Gamma=[[cfg.gamma]],
        disturbance=ExpDecay(amplitude=cfg.eps_amp, rate=cfg.eps_rate),
        name="sine",
    )


def run(cfg: SineConfig = SineConfig(), h=None, tf=None):
    return build(cfg).run(
        [cfg.x1_0, cfg.x2_0],
        [cfg.theta_hat0],
        tf=cfg.tf if tf is None else tf,
        h=cfg.h if h is None else h,
    )

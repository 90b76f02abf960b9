"""Spring-mass plant with a nonlinear damping term ``theta * x2 * |x2|``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import ClosedLoop, ExpDecay, GoalFunction, Parametrization, Plant, linear_target


@dataclass(frozen=True)
class SpringConfig:
    lam: float = 1.0
    k0: float = -1.0
    theta: float = 0.5
    theta_hat0: float = 0.0
    gamma: float = 1.0
    rate: float = 1.0
    x1_0: float = 1.0
    x2_0: float = 0.0
    theta_lo: float = -2.0
    theta_hi: float = 2.0
    eps_amp: float = 0.0
    eps_rate: float = 1.0
    h: float = 1e-3
    tf: float = 20.0

    def __post_init__(self):
        if not self.k0 < 0:
            raise ValueError("k0 must be negative")
        if not self.lam > 0:
            raise ValueError("lam must be positive")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")


def spring_mass_rhs(x, theta, u, t=0.0, k0=-1.0, damping=None):
    x1, x2 = x
    f = theta * x2 * abs(x2) if damping is None else damping(x2, t)
    return np.array([x2, k0 * x1 + f + u])


def state_bound(lam, x1_0, psi_inf):
    """Sup-norm bound on the state given the sup-norm of ``x1 + lam*x2``."""
    return (1 + 1 / lam) * abs(x1_0) + (1 + 2 / lam) * psi_inf


def plant(cfg: SpringConfig) -> Plant:
    k0 = cfg.k0
    return Plant(
        f1=lambda x: np.array([x[1]]),
        f2=lambda x, th: np.array([k0 * x[0] + float(np.atleast_1d(th)[0]) * x[1] * abs(x[1])]),
        g1=lambda x: np.zeros(1),
        g2=lambda x: np.ones(1),
        theta_true=[cfg.theta],
        theta_domain=([cfg.theta_lo], [cfg.theta_hi]),
        q=1,
    )


def goal(cfg: SpringConfig) -> GoalFunction:
    lam = cfg.lam
    grad = np.array([1.0, lam])
    return GoalFunction(
        psi=lambda x, t: x[0] + lam * x[1],
        grad_x=lambda x, t: grad,
        dt=lambda x, t: 0.0,
    )


def parametrization(cfg: SpringConfig) -> Parametrization:
    lam, k0 = cfg.lam, cfg.k0

    def f(x, th, t):
        return x[1] + lam * (k0 * x[0] + float(np.atleast_1d(th)[0]) * x[1] * abs(x[1]))

    def Psi(x, t):
        return np.array([x[0] * x[1] * abs(x[1]) + 2 * lam / 3 * abs(x[1]) ** 3])

    return Parametrization(
        f=f,
        alpha=lambda x, t: np.array([x[1] * abs(x[1])]),
        D=lam,
        D1=lam,
        q=1,
        Psi=Psi,
        dalpha_dx=lambda x, t: np.array([[0.0, 2 * abs(x[1])]]),
        dalpha_dt=lambda x, t: np.zeros(1),
        dPsi_dx=lambda x, t: np.array([[x[1] * abs(x[1]), 2 * abs(x[1]) * (x[0] + lam * x[1])]]),
        dPsi_dt=lambda x, t: np.zeros(1),
    )


def build(cfg: SpringConfig = SpringConfig()) -> ClosedLoop:
    return ClosedLoop(
        plant=plant(cfg),
        goal=goal(cfg),
        target=linear_target(cfg.rate),
        parm=parametrization(cfg),
        Gamma=[[cfg.gamma]],
        disturbance=ExpDecay(amplitude=cfg.eps_amp, rate=cfg.eps_rate),
        name="spring",
    )


def run(cfg: SpringConfig = SpringConfig(), h=None, tf=None):
    loop = build(cfg)
    return loop.run(
        [cfg.x1_0, cfg.x2_0],
        [cfg.theta_hat0],
        tf=cfg.tf if tf is None else tf,
        h=cfg.h if h is None else h,
    )

"""Linearly parametrized plant driven by a harmonic oscillator.

State ``(s, c, y)``: ``s' = c``, ``c' = -s`` generate the regressor
``alpha = (s, c)`` and ``y' = s*theta_0 + c*theta_1 + u``. Starting from
``(0, 1, 0)`` the regressor is ``(sin t, cos t)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import ClosedLoop, ExpDecay, GoalFunction, Parametrization, Plant, linear_target


@dataclass(frozen=True)
class LinearConfig:
    theta0: float = 1.0
    theta1: float = -1.0
    theta_hat0_0: float = 0.0
    theta_hat0_1: float = 0.0
    gamma: float = 1.0
    rate: float = 1.0
    y0: float = 0.0
    eps_amp: float = 0.0
    eps_rate: float = 1.0
    h: float = 1e-2
    tf: float = 500.0

    @property
    def theta(self):
        return np.array([self.theta0, self.theta1])

    @property
    def theta_hat0(self):
        return np.array([self.theta_hat0_0, self.theta_hat0_1])


_G = np.array([0.0, 0.0, 1.0])
_GRAD = np.array([0.0, 0.0, 1.0])
_DALPHA = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])


def plant(cfg: LinearConfig) -> Plant:
    return Plant(
        f1=lambda x: np.array([x[1], -x[0]]),
        f2=lambda x, th: np.array([x[0] * th[0] + x[1] * th[1]]),
        g1=lambda x: np.zeros(2),
        g2=lambda x: np.ones(1),
        theta_true=cfg.theta,
        theta_domain=([-5.0, -5.0], [5.0, 5.0]),
        q=2,
    )


def parametrization(cfg: LinearConfig) -> Parametrization:
    return Parametrization(
        f=lambda x, th, t: x[0] * th[0] + x[1] * th[1],
        alpha=lambda x, t: x[:2].copy(),
        D=1.0,
        D1=1.0,
        q=2,
        dalpha_dx=lambda x, t: _DALPHA,
        dalpha_dt=lambda x, t: np.zeros(2),
    )


def build(cfg: LinearConfig = LinearConfig()) -> ClosedLoop:
    return ClosedLoop(
        plant=plant(cfg),
        goal=GoalFunction(psi=lambda x, t: x[2], grad_x=lambda x, t: _GRAD, dt=lambda x, t: 0.0),
        target=linear_target(cfg.rate),
        parm=parametrization(cfg),
        Gamma=cfg.gamma * np.eye(2),
        disturbance=ExpDecay(amplitude=cfg.eps_amp, rate=cfg.eps_rate),
        name="linear",
    )


def run(cfg: LinearConfig = LinearConfig(), h=None, tf=None):
    return build(cfg).run(
        [0.0, 1.0, cfg.y0],
        cfg.theta_hat0,
        tf=cfg.tf if tf is None else tf,
        h=cfg.h if h is None else h,
    )

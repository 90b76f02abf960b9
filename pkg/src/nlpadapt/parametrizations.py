"""Library of monotone parametrizations used as verification fixtures.

Every ``f`` and ``alpha`` here broadcasts: state and parameter components run
along axis 0, so a whole grid can be evaluated in one call.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Parametrization
from .scenarios.wheel import LugreParams
from .verify import all_pairs, product_grid

GRID_POINTS = 20


@dataclass(frozen=True)
class Fixture:
    """A parametrization together with its domain of physical relevance.

    ``x_bounds`` covers every state component (degenerate intervals pin the
    ones the model ignores); ``theta_bounds`` is the box for the parameter
    vector as it enters ``f``.
    """

    name: str
    parm: Parametrization
    x_bounds: tuple
    theta_bounds: tuple

    def grids(self, total=GRID_POINTS**4):
        """Even product grids whose (x, theta_hat, theta) tuple count reaches ``total``.

        All free axes share one resolution, the smallest that yields at
        least ``total`` tuples.
        """
        free_x = sum(1 for lo, hi in self.x_bounds if hi > lo)
        d = len(self.theta_bounds)
        axes = free_x + 2 * d
        n = max(2, math.ceil(total ** (1.0 / axes) - 1e-9))
        return product_grid(self.x_bounds, n), all_pairs(product_grid(self.theta_bounds, n))


def stiction(scale=1.0, delta_theta=2.0) -> Fixture:
    """``theta0 * exp(-x2^2 theta1)`` in the coordinates ``(theta1, ln theta0)``.

    ``scale`` multiplies alpha; ``scale=-1`` is a deliberately wrong direction.
    """

    def f(x, th, t):
        return np.exp(-x[1] ** 2 * th[0] + th[1])

    def alpha(x, t):
        x2 = np.asarray(x[1], dtype=float)
        return scale * np.array([-(x2**2), np.ones_like(x2)])

    lo = 0.05
    parm = Parametrization(f=f, alpha=alpha, q=0)
    return Fixture(
        "stiction" if scale > 0 else "stiction-flipped",
        parm,
        ((0.0, 0.0), (-3.0, 3.0)),
        ((lo, delta_theta), (math.log(lo), math.log(delta_theta))),
    )


def tyre_road(p: LugreParams = LugreParams(), delta_theta=2.0, x3_bounds=(0.01, 0.95), x2_bounds=(1.0, 120.0)) -> Fixture:
    """Steady-state tyre force with the slip-stiffness ratio as direction."""

    def f(x, th, t):
        x2, x3 = x[1], x[2]
        theta = th[0]
        one = 1.0 - x3
        g = theta * (p.muC + (p.muS - p.muC) * np.exp(-np.abs(p.r * x2 * x3) / (np.abs(one) * p.vs)))
        a = p.stiffness * x3 / one
        return p.Fn * np.sign(x2) * a * g / (a + g)

    def alpha(x, t):
        x3 = np.asarray(x[2], dtype=float)
        return np.array([x3 / (1.0 - x3)])

    parm = Parametrization(f=f, alpha=alpha, q=0)
    return Fixture("tyre-road", parm, ((0.0, 0.0), x2_bounds, x3_bounds), ((0.05, delta_theta),))


def monod(variant=1, delta_theta=2.0, x_bounds=((0.05, 5.0), (0.05, 5.0))) -> Fixture:
    """``x1 x2 / (theta0 + theta1 x_k)`` for ``k = variant``.

    The rate decreases in both parameters, so the monotone direction is
    ``-x1 x2 (1, x_k)``.
    """
    if variant not in (1, 2):
        raise ValueError("variant must be 1 or 2")
    k = variant - 1

    def f(x, th, t):
        return x[0] * x[1] / (th[0] + th[1] * x[k])

    def alpha(x, t):
        x1, x2 = np.asarray(x[0], dtype=float), np.asarray(x[1], dtype=float)
        w = x1 * x2
        return -np.array([w, w * (x1 if k == 0 else x2)])

    parm = Parametrization(f=f, alpha=alpha, q=0)
    return Fixture(f"monod-x{variant}", parm, tuple(x_bounds), ((0.05, delta_theta), (0.05, delta_theta)))


def table_fixtures() -> list:
    return [stiction(), tyre_road(), monod(1), monod(2)]

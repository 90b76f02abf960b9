"""Built-in case studies and the name registry used by the CLI."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..verify import all_pairs, check_monotonicity, poincare_check, product_grid, realizability_residual
from . import linear, sine, spring, wheel

REALIZABILITY_TOL = 1e-6
ABS_THETA_RANGE = (0.3, 1.5)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class Scenario:
    name: str
    config_cls: type
    run: Callable
    preflight: Callable
    build: Callable
    wheel: bool = False


def _assumption_checks(parm, goal, x_grid, pairs, t=0.0):
    mono = check_monotonicity(parm, x_grid, pairs, t)
    resid = max(float(np.max(np.abs(realizability_residual(parm, goal, x, t)))) for x in x_grid)
    asym = poincare_check(parm, goal, x_grid[:: max(1, len(x_grid) // 25)], t)
    return [
        Check("monotonicity", mono.ok, f"{mono.n_violations} violations of {mono.evaluated}, margin {mono.margin:.3g}"),
        Check("realizability", resid <= REALIZABILITY_TOL, f"max residual {resid:.3g}"),
        Check("poincare", asym <= 1e-4, f"max asymmetry {asym:.3g}"),
    ]


def _domain_check(values, lo, hi):
    vals = np.ravel(np.asarray(values, dtype=float))
    lo, hi = np.broadcast_to(lo, vals.shape), np.broadcast_to(hi, vals.shape)
    bad = [float(v) for v, a, b in zip(vals, lo, hi) if not a <= v <= b]
    return Check("domain", not bad, f"{len(bad)} parameter values outside the certified range")


def _spring_preflight(cfg: spring.SpringConfig):
    x_grid = product_grid([(-2.0, 2.0), (-2.0, 2.0)], 10)
    pairs = all_pairs(np.linspace(cfg.theta_lo, cfg.theta_hi, 8))
    dom = _domain_check([cfg.theta, cfg.theta_hat0], cfg.theta_lo, cfg.theta_hi)
    return [dom] + _assumption_checks(spring.parametrization(cfg), spring.goal(cfg), x_grid, pairs)


def _sine_preflight(cfg: sine.SineConfig):
    bands = sine.certified_omega_m(cfg.theta_lo, cfg.theta_hi)
    # interior of the certified bands; the band edges have zero margin
    x1 = np.concatenate([np.linspace(a, b, 8)[1:-1] for a, b in bands.intervals])
    x_grid = np.array([(v, w) for v in x1 for w in (-1.0, 0.0, 1.0)])
    parm = sine.parametrization(cfg, bands)
    pairs = all_pairs(np.linspace(cfg.theta_lo, cfg.theta_hi, 8))
    dom = _domain_check([cfg.theta, cfg.theta_hat0], cfg.theta_lo, cfg.theta_hi)
    return [dom] + _assumption_checks(parm, sine.goal(cfg), x_grid, pairs)


def _linear_preflight(cfg: linear.LinearConfig):
    x_grid = np.array([(np.sin(a), np.cos(a), y) for a in np.linspace(0, 2 * np.pi, 12) for y in (-1.0, 1.0)])
    pairs = all_pairs(product_grid([(-2.0, 2.0), (-2.0, 2.0)], 4))
    goal = linear.build(cfg).goal
    dom = _domain_check(np.concatenate([cfg.theta, cfg.theta_hat0]), -2.0, 2.0)
    return [dom] + _assumption_checks(linear.parametrization(cfg), goal, x_grid, pairs)


def _abs_preflight(cfg: wheel.AbsConfig):
    p = cfg.params
    parm = wheel.error_parametrization(p)
    x_grid = wheel.operating_grid(p, n=20)
    lo, hi = ABS_THETA_RANGE
    pairs = all_pairs(np.linspace(lo, hi, 20))
    dom = _domain_check(list(wheel.RoadProfile().values) + [cfg.theta_hat0], lo, hi)
    return [dom] + _assumption_checks(parm, wheel.error_goal(), x_grid, pairs)


REGISTRY = {
    "spring": Scenario("spring", spring.SpringConfig, spring.run, _spring_preflight, spring.build),
    "sine": Scenario("sine", sine.SineConfig, sine.run, _sine_preflight, sine.build),
    "linear": Scenario("linear", linear.LinearConfig, linear.run, _linear_preflight, linear.build),
    "abs": Scenario("abs", wheel.AbsConfig, wheel.run, _abs_preflight, wheel.build, wheel=True),
}


def get(name: str) -> Scenario:
    try:
        return REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; choose from {', '.join(REGISTRY)}") from None

"""Single-wheel braking with steady-state LuGre friction and on-line slip optimisation."""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

import numpy as np

from ..core import Disturbance
from ..errors import NotTerminated, SlipOutOfRange, StoppedVehicle
from ..integrate import StopCondition, Trace, simulate

V_STOP = 5.0
DEFAULT_SPEED = 31.25
DEFAULT_STEP = 1e-4
# time after a road switch excluded from the finite-form identity check
SWITCH_SETTLE = 2e-3
# (D, D1) of the observer-error model over x1 in [5, 35], x3 in [0.01, 0.6],
# theta in [0.3, 1.5]; grid estimates rounded outward
GROWTH = {"product": (200.0, 2.3), "ratio": (210.0, 19.0)}
SLIP_GRID = np.round(np.arange(0.01, 0.6 + 5e-4, 1e-3), 6)
_GRID_RATIO = SLIP_GRID / (1.0 - SLIP_GRID)


@dataclass(frozen=True)
class LugreParams:
    sigma0: float = 200.0
    L_patch: float = 0.25
    muC: float = 0.5
    muS: float = 0.9
    vs: float = 12.5
    r: float = 0.3
    m: float = 200.0
    J: float = 0.23
    Fn: float = 3000.0
    Ks: float = 30.0
    # "product" couples stiffness and patch length as sigma0*L_patch,
    # "ratio" as sigma0/L_patch
    stiffness_law: str = "product"

    def __post_init__(self):
        if self.stiffness_law not in ("product", "ratio"):
            raise ValueError("stiffness_law must be 'product' or 'ratio'")
        if not self.muS > self.muC > 0:
            raise ValueError("need muS > muC > 0")
        for name in ("sigma0", "L_patch", "vs", "r", "m", "J", "Fn", "Ks"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def stiffness(self) -> float:
        if self.stiffness_law == "ratio":
            return self.sigma0 / self.L_patch
        return self.sigma0 * self.L_patch


@dataclass(frozen=True)
class RoadProfile:
    """Piecewise-constant road parameter over travelled distance.

    Interval ``k`` is ``(breakpoints[k-1], breakpoints[k]]``; the first one
    is closed at 0.
    """

    breakpoints: tuple = (8.0, 16.0, 24.0, 32.0, 40.0)
    values: tuple = (0.3, 1.3, 0.7, 0.4, 1.5, 0.6)

    def __post_init__(self):
        if len(self.values) != len(self.breakpoints) + 1:
            raise ValueError("need one more value than breakpoints")
        if any(b2 <= b1 for b1, b2 in zip(self.breakpoints, self.breakpoints[1:])):
            raise ValueError("breakpoints must increase")

    def __call__(self, s: float) -> float:
        return self.values[bisect.bisect_left(self.breakpoints, s)]

    def segment(self, s: float) -> int:
        return bisect.bisect_left(self.breakpoints, s)


def _friction(p: LugreParams, x2, x3, theta):
    # scalar fast path; x3 in [0, 1)
    if x2 == 0.0 or x3 == 0.0:
        return 0.0
    one = 1.0 - x3
    g = theta * (p.muC + (p.muS - p.muC) * math.exp(-abs(p.r * x2 * x3) / (abs(one) * p.vs)))
    a = p.stiffness * x3 / one
    return p.Fn * math.copysign(1.0, x2) * a * g / (a + g)


def lugre_friction(p: LugreParams, x2, x3, theta):
    """Steady-state tyre force; accepts scalars or arrays in ``x3``."""
    x3a = np.asarray(x3, dtype=float)
    if np.any(x3a < 0) or np.any(x3a >= 1):
        raise SlipOutOfRange(f"slip must lie in [0, 1), got {x3}")
    if x3a.ndim == 0:
        return _friction(p, float(x2), float(x3a), float(theta))
    one = 1.0 - x3a
    g = theta * (p.muC + (p.muS - p.muC) * np.exp(-np.abs(p.r * x2 * x3a) / (np.abs(one) * p.vs)))
    a = p.stiffness * x3a / one
    with np.errstate(invalid="ignore", divide="ignore"):
        out = p.Fn * np.sign(x2) * np.where(a + g > 0, a * g / (a + g), 0.0)
    return out


def optimal_slip(p: LugreParams, theta, x2) -> float:
    """Grid argmax of the friction force; ties go to the smallest slip."""
    if not theta > 0:
        raise ValueError("theta must be positive")
    # same expression as lugre_friction on the fixed grid, with the
    # x2-independent factors hoisted
    g = theta * (p.muC + (p.muS - p.muC) * np.exp(-abs(p.r * x2) / p.vs * _GRID_RATIO))
    a = p.stiffness * _GRID_RATIO
    fs = p.Fn * np.sign(x2) * (a * g / (a + g))
    return float(SLIP_GRID[int(np.argmax(fs))])


def slip_gain(p: LugreParams, x3) -> float:
    return (1.0 - x3) / p.m + p.r**2 / p.J


def wheel_rhs(x, theta, u, p: LugreParams, v_stop=V_STOP):
    x1, x2, x3 = x
    if x1 <= v_stop:
        raise StoppedVehicle(f"speed {x1:.4g} at or below {v_stop}")
    fs = _friction(p, x2, x3, theta)
    return (
        -fs / p.m,
        (fs * p.r - u) / p.J,
        -(slip_gain(p, x3) * fs - p.r / p.J * u) / x1,
    )


def slip_control(p: LugreParams, x, theta_hat, x3_star) -> float:
    x1, x2, x3 = x
    fs = _friction(p, x2, x3, theta_hat)
    return p.J / p.r * (slip_gain(p, x3) * fs - p.Ks * x1 * (x3 - x3_star))


@dataclass
class SlipStep:
    u: float
    xhat3_dot: float
    theta_hat: float
    theta_I_dot: float
    x3_star: float


def slip_control_loop_step(x, xhat3, theta_I, p: LugreParams, gamma=100.0, x3_star=None, sign=-1.0, v_stop=V_STOP):
    """Controller, observer and estimator evaluated at one state.

    ``sign=-1`` uses the slip-observer error ``xhat3 - x3``, for which the
    error model is increasing in theta; ``sign=+1`` is ``x3 - xhat3``.
    """
    x1, x2, x3 = x
    if x1 <= v_stop:
        raise StoppedVehicle(f"speed {x1:.4g} at or below {v_stop}")
    psi = sign * (x3 - xhat3)
    th = gamma * (psi + theta_I)
    if x3_star is None:
        x3_star = optimal_slip(p, max(th, 1e-6), x2)
    u = slip_control(p, x, th, x3_star)
    fs_hat = _friction(p, x2, x3, th)
    xhat3_dot = -(slip_gain(p, x3) * fs_hat - p.r / p.J * u) / x1 + (x3 - xhat3)
    return SlipStep(u, xhat3_dot, th, psi, x3_star)


@dataclass
class WheelLoop:
    """Closed-loop braking run.

    Integrated vector ``[x1, x2, x3, xhat3, theta_I, s]`` with ``s`` the
    travelled distance. ``x3_star`` fixes the slip target; when ``None`` it
    is recomputed from the current estimate at the start of every step.
    The disturbance is added to the observer, shifting psi' by ``eps``.
    """

    params: LugreParams = field(default_factory=LugreParams)
    road: RoadProfile = field(default_factory=RoadProfile)
    gamma: float = 100.0
    x3_star: float | None = None
    sign: float = -1.0
    disturbance: Disturbance = field(default_factory=Disturbance)
    v_stop: float = V_STOP

    def __post_init__(self):
        self._held = (None, None)

    def _target(self, t, y):
        if self.x3_star is not None:
            return self.x3_star
        if self._held[0] != t:
            th = self.gamma * (self.sign * (y[2] - y[3]) + y[4])
            self._held = (t, optimal_slip(self.params, max(th, 1e-6), y[1]))
        return self._held[1]

    def hold(self, t, y):
        self._target(t, y)

    def _parts(self, t, y):
        x1, x2, x3, xhat3, theta_I, s = y.tolist()
        p = self.params
        theta = self.road(s)
        psi = self.sign * (x3 - xhat3)
        th = self.gamma * (psi + theta_I)
        x3s = self._held[1] if self.x3_star is None else self.x3_star
        u = slip_control(p, (x1, x2, x3), th, x3s)
        return x1, x2, x3, xhat3, s, theta, psi, th, u, x3s

    def rhs(self, t, y):
        x1, x2, x3, xhat3, s, theta, psi, th, u, _ = self._parts(t, y)
        p = self.params
        if not 0.0 <= x3 < 1.0:
            raise SlipOutOfRange(f"slip {x3:.4g} left [0, 1) at t={t:.6g}")
        # stop is detected at step boundaries; stages may dip below v_stop
        d1, d2, d3 = wheel_rhs((x1, x2, x3), theta, u, p, v_stop=0.0)
        dxh = -(slip_gain(p, x3) * _friction(p, x2, x3, th) - p.r / p.J * u) / x1 + (x3 - xhat3)
        eps = self.disturbance(t)
        if eps != 0.0:
            dxh -= self.sign * eps
        return np.array([d1, d2, d3, dxh, psi, x1])

    def error_f(self, y, theta):
        x1, x2, x3 = float(y[0]), float(y[1]), float(y[2])
        return -self.sign * slip_gain(self.params, x3) * _friction(self.params, x2, x3, theta) / x1

    def observe(self, t, y):
        self._target(t, y)
        x1, x2, x3, xhat3, s, theta, psi, th, u, x3s = self._parts(t, y)
        tail = self.disturbance.l2_tail(t)
        D, D1 = GROWTH[self.params.stiffness_law]
        return {
            "psi": psi,
            "u": u,
            "theta_hat": th,
            "theta_true": theta,
            "alpha": 1.0,
            "phi": psi,
            "mismatch": self.error_f(y, theta) - self.error_f(y, th),
            "eps": self.disturbance(t),
            "V": 0.5 * (th - theta) ** 2 / self.gamma + D / (4.0 * D1**2) * tail**2,
            "adapt_active": 1.0,
            "x3_star": x3s,
            "segment": float(self.road.segment(s)),
        }

    def initial_state(self, v0=DEFAULT_SPEED, theta_hat0=0.9, slip0=0.0):
        x2 = v0 * (1.0 - slip0) / self.params.r
        return np.array([v0, x2, slip0, slip0, theta_hat0 / self.gamma, 0.0])

    def run(self, v0=DEFAULT_SPEED, theta_hat0=0.9, h=DEFAULT_STEP, tf=30.0, slip0=0.0) -> Trace:
        self._held = (None, None)
        y0 = self.initial_state(v0, theta_hat0, slip0)
        trace = simulate(
            self.rhs,
            y0,
            0.0,
            tf,
            h,
            stop=StopCondition.below(0, self.v_stop),
            observers=self.observe,
            q=0,
            n=3,
            on_step=self.hold,
        )
        D, D1 = GROWTH[self.params.stiffness_law]
        trace.meta.update(name="abs", Gamma=np.array([[self.gamma]]), D=D, D1=D1, h=h, switch_settle=SWITCH_SETTLE)
        return trace


def braking_distance(trace: Trace) -> float:
    if trace.status != "stopped":
        raise NotTerminated("run ended before the speed cut-off")
    return float(np.trapezoid(trace.x[:, 0], trace.times))


def error_parametrization(p: LugreParams = LugreParams(), D=1.0, D1=1.0):
    """Uncertainty of the slip-observer error model on ``x = (x1, x2, x3, xhat3)``.

    ``f = (k(x3)/x1) * Fs(x2, x3, theta)`` is increasing in theta, so the
    direction is the constant 1 and no compensator is needed.
    """
    from ..core import Parametrization

    def f(x, th, t):
        x1, x2, x3 = x[0], x[1], x[2]
        theta = th[0]
        one = 1.0 - x3
        g = theta * (p.muC + (p.muS - p.muC) * np.exp(-np.abs(p.r * x2 * x3) / (np.abs(one) * p.vs)))
        a = p.stiffness * x3 / one
        fs = p.Fn * np.sign(x2) * a * g / (a + g)
        return ((1.0 - x3) / p.m + p.r**2 / p.J) * fs / x1

    def alpha(x, t):
        return np.ones((1,) + np.shape(x[0]))

    return Parametrization(f=f, alpha=alpha, D=D, D1=D1, q=0)


def error_goal():
    from ..core import GoalFunction

    grad = np.array([0.0, 0.0, -1.0, 1.0])
    return GoalFunction(psi=lambda x, t: x[3] - x[2], grad_x=lambda x, t: grad, dt=lambda x, t: 0.0)


def operating_grid(p: LugreParams = LugreParams(), n=20, speed=(V_STOP, 35.0), slip=(0.01, 0.6)) -> np.ndarray:
    """States ``(x1, x1 (1 - x3) / r, x3, x3)`` covering the braking envelope."""
    rows = []
    for v in np.linspace(*speed, n):
        for s in np.linspace(*slip, n):
            rows.append((v, v * (1.0 - s) / p.r, s, s))
    return np.array(rows)


@dataclass(frozen=True)
class AbsConfig:
    v0: float = DEFAULT_SPEED
    theta_hat0: float = 0.9
    gamma: float = 100.0
    x3_star: float | None = None
    sign: float = -1.0
    sigma0: float = 200.0
    L_patch: float = 0.25
    muC: float = 0.5
    muS: float = 0.9
    vs: float = 12.5
    r: float = 0.3
    m: float = 200.0
    J: float = 0.23
    Fn: float = 3000.0
    Ks: float = 30.0
    stiffness_law: str = "product"
    v_stop: float = V_STOP
    eps_amp: float = 0.0
    eps_rate: float = 1.0
    h: float = DEFAULT_STEP
    tf: float = 30.0

    def __post_init__(self):
        if not self.v0 > self.v_stop:
            raise ValueError("initial speed must exceed the cut-off")
        if self.x3_star is not None and not 0.0 < self.x3_star < 1.0:
            raise ValueError("x3_star must lie in (0, 1)")

    @property
    def params(self) -> LugreParams:
        names = ("sigma0", "L_patch", "muC", "muS", "vs", "r", "m", "J", "Fn", "Ks", "stiffness_law")
        return LugreParams(**{k: getattr(self, k) for k in names})


def build(cfg: AbsConfig = AbsConfig()) -> WheelLoop:
    from ..core import ExpDecay

    return WheelLoop(
        params=cfg.params,
        gamma=cfg.gamma,
        x3_star=cfg.x3_star,
        sign=cfg.sign,
        disturbance=ExpDecay(amplitude=cfg.eps_amp, rate=cfg.eps_rate),
        v_stop=cfg.v_stop,
    )


def run(cfg: AbsConfig = AbsConfig(), h=None, tf=None) -> Trace:
    return build(cfg).run(cfg.v0, cfg.theta_hat0, h=cfg.h if h is None else h, tf=cfg.tf if tf is None else tf)

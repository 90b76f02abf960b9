"""Fixed-step RK4 integration, trace recording and signal norms."""
from __future__ import annotations

import operator
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import Diverged, EmptyWindow, NonFiniteDerivative, SlipOutOfRange, UnknownChannel

DEFAULT_STEP = 1e-3
DIVERGENCE_CAP = 1e12


@dataclass(frozen=True)
class SystemState:
    """Plant state split into uncertainty-independent (x1) and
    uncertainty-dependent (x2) partitions."""

    x1: np.ndarray
    x2: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        x1 = np.zeros(0) if self.x1 is None else np.asarray(self.x1, dtype=float).ravel()
        x2 = np.atleast_1d(np.asarray(self.x2, dtype=float)).ravel()
        if x2.size < 1:
            raise ValueError("uncertainty-dependent partition must be non-empty")
        if not (np.all(np.isfinite(x1)) and np.all(np.isfinite(x2))):
            raise ValueError("state entries must be finite")
        object.__setattr__(self, "x1", x1)
        object.__setattr__(self, "x2", x2)
        object.__setattr__(self, "t", float(self.t))

    @property
    def q(self) -> int:
        return self.x1.size

    @property
    def p(self) -> int:
        return self.x2.size

    @property
    def x(self) -> np.ndarray:
        return np.concatenate([self.x1, self.x2])

    @classmethod
    def from_vector(cls, x, q: int, t: float = 0.0) -> "SystemState":
        x = np.asarray(x, dtype=float).ravel()
        return cls(x[:q], x[q:], t)


_COMPARATORS = {
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
}


@dataclass(frozen=True)
class StopRule:
    """``y[index] <op> threshold``, evaluated on the integrated vector."""

    index: int
    op: str
    threshold: float

    def __post_init__(self):
        if self.op not in _COMPARATORS:
            raise ValueError(f"unknown comparator {self.op!r}")

    def __call__(self, y) -> bool:
        return bool(_COMPARATORS[self.op](y[self.index], self.threshold))


@dataclass(frozen=True)
class StopCondition:
    rules: tuple = ()

    def fired(self, y) -> bool:
        return any(rule(y) for rule in self.rules)

    @classmethod
    def below(cls, index: int, threshold: float) -> "StopCondition":
        return cls((StopRule(index, "<=", threshold),))


NEVER = StopCondition()


@dataclass
class Trace:
    """Time-indexed record of an integration run.

    ``states`` holds the full integrated vector (plant state first, then any
    estimator/auxiliary states); ``n`` and ``q`` describe the plant part.
    """

    times: np.ndarray
    states: np.ndarray
    channels: dict = field(default_factory=dict)
    q: int = 0
    n: int | None = None
    status: str = "completed"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.atleast_2d(np.asarray(self.states, dtype=float))
        if self.n is None:
            self.n = self.states.shape[1]
        chans = {}
        for name, values in self.channels.items():
            arr = np.asarray(values, dtype=float)
            if arr.ndim == 1:
                arr = arr[:, None]
            if arr.shape[0] != self.times.size:
                raise ValueError(f"channel {name!r} has {arr.shape[0]} rows, expected {self.times.size}")
            chans[name] = arr
        self.channels = chans
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("trace times must be strictly increasing")

    def __len__(self):
        return self.times.size

    def channel(self, name: str) -> np.ndarray:
        if name == "x":
            return self.states[:, : self.n]
        try:
            return self.channels[name]
        except KeyError:
            raise UnknownChannel(f"unknown channel {name!r}") from None

    def state(self, i: int) -> SystemState:
        return SystemState.from_vector(self.states[i, : self.n], self.q, self.times[i])

    @property
    def x(self) -> np.ndarray:
        return self.states[:, : self.n]


def rk4_step(rhs: Callable, y, t: float, h: float):
    """One classical Runge-Kutta step of ``y' = rhs(t, y)``.

    ``y`` may be an array or a :class:`SystemState`; in the latter case
    ``rhs`` receives and the result is a SystemState with the same split.
    """
    if h <= 0:
        raise ValueError("step must be positive")
    if isinstance(y, SystemState):
        q = y.q
        vec = y.x

        def f(tt, v):
            return np.asarray(rhs(SystemState.from_vector(v, q, tt), tt), dtype=float)

        out = _rk4(f, vec, t, h)
        return SystemState.from_vector(out, q, t + h)
    return _rk4(lambda tt, v: np.asarray(rhs(tt, v), dtype=float), np.asarray(y, dtype=float), t, h)


def _rk4(f, y, t, h):
    k1 = f(t, y)
    _check(k1, t)
    k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
    _check(k2, t)
    k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
    _check(k3, t)
    k4 = f(t + h, y + h * k3)
    _check(k4, t)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _check(k, t):
    # a single NaN/Inf poisons the sum, which is cheaper than isfinite+all
    if not np.isfinite(k.sum()):
        raise NonFiniteDerivative(f"non-finite derivative in step starting at t={t:.6g}")


def simulate(
    rhs: Callable,
    state0,
    t0: float,
    tf: float,
    h: float = DEFAULT_STEP,
    stop: StopCondition = NEVER,
    observers: Sequence[Callable] | Callable | None = None,
    cap: float = DIVERGENCE_CAP,
    q: int | None = None,
    n: int | None = None,
    on_step: Callable | None = None,
) -> Trace:
    """Integrate ``y' = rhs(t, y)`` on the grid ``t0 + k*h`` up to ``tf``.

    The stop condition is tested on every recorded sample, the initial one
    included; the step that makes it fire is kept. Each observer maps
    ``(t, y)`` to a dict of channel values recorded at every sample.
    ``on_step(t, y)``, if given, runs before every step; it lets a caller
    hold a signal constant over the step (zero-order hold).
    """
    if not tf > t0:
        raise ValueError("tf must exceed t0")
    if not h > 0:
        raise ValueError("step must be positive")
    if isinstance(state0, SystemState):
        q = state0.q if q is None else q
        n = state0.x.size if n is None else n
        y = state0.x
    else:
        y = np.asarray(state0, dtype=float).ravel().copy()
    q = 0 if q is None else q
    if observers is None:
        observers = ()
    elif callable(observers):
        observers = (observers,)

    def f(t, v):
        return np.asarray(rhs(t, v), dtype=float)

    nsteps = int(np.floor((tf - t0) / h + 1e-9))
    times = [t0]
    states = [y]
    records: dict[str, list] = {}

    def observe(t, yy):
        for obs in observers:
            for name, val in obs(t, yy).items():
                records.setdefault(name, []).append(val)

    def build(status):
        chans = {k: np.array(v, dtype=float) for k, v in records.items()}
        m = min([len(times)] + [len(v) for v in chans.values()])
        chans = {k: v[:m] for k, v in chans.items()}
        return Trace(np.array(times[:m]), np.array(states[:m]), chans, q=q, n=n, status=status)

    observe(t0, y)
    status = "completed"
    if stop.fired(y):
        return build("stopped")
    for k in range(1, nsteps + 1):
        t_prev = times[-1]
        if on_step is not None:
            on_step(t_prev, y)
        try:
            y = _rk4(f, y, t_prev, h)
        except (NonFiniteDerivative, SlipOutOfRange) as exc:
            raise Diverged(str(exc), trace=build("diverged")) from exc
        if not np.all(np.isfinite(y)) or np.max(np.abs(y)) > cap:
            raise Diverged(f"state magnitude exceeded {cap:g} at t={t0 + k * h:.6g}", trace=build("diverged"))
        t = t0 + k * h
        times.append(t)
        states.append(y)
        observe(t, y)
        if stop.fired(y):
            status = "stopped"
            break
    return build(status)


def _window_samples(t, v, ta, tb):
    """Samples of ``v`` restricted to [ta, tb] with linearly interpolated ends."""
    if tb <= ta:
        raise EmptyWindow(f"empty window [{ta}, {tb}]")
    tol = 1e-9 * max(1.0, abs(t[-1]))
    if ta < t[0] - tol or tb > t[-1] + tol:
        raise EmptyWindow(f"window [{ta}, {tb}] outside trace span [{t[0]}, {t[-1]}]")
    ta = max(ta, t[0])
    tb = min(tb, t[-1])
    inside = (t > ta) & (t < tb)
    ts = np.concatenate([[ta], t[inside], [tb]])
    va = np.array([np.interp(ta, t, col) for col in v.T])
    vb = np.array([np.interp(tb, t, col) for col in v.T])
    vs = np.vstack([va[None, :], v[inside], vb[None, :]])
    return ts, vs


def _magnitude(v) -> np.ndarray:
    """Row-wise Euclidean norm, scaled so tiny or huge entries do not under/overflow."""
    if v.shape[1] == 1:
        return np.abs(v[:, 0])
    scale = np.max(np.abs(v), axis=1)
    safe = np.where(scale > 0, scale, 1.0)
    return scale * np.sqrt(np.sum((v / safe[:, None]) ** 2, axis=1))


def signal_norm(trace: Trace, channel: str, p=2, window=None) -> float:
    """L2 (trapezoid) or L-infinity norm of a channel over ``window``.

    The pointwise magnitude is the Euclidean norm of the channel vector.
    """
    v = trace.channel(channel)
    t = trace.times
    if window is None:
        window = (t[0], t[-1])
    ta, tb = window
    if t.size < 2:
        if tb > ta:
            raise EmptyWindow("single-sample trace has no extent")
    ts, vs = _window_samples(t, v, ta, tb)
    mag = _magnitude(vs)
    if p in (np.inf, "inf", float("inf")):
        return float(np.max(mag))
    if p == 2:
        return float(np.sqrt(np.trapezoid(mag * mag, ts)))
    raise ValueError("p must be 2 or inf")


def running_l2(times, values) -> np.ndarray:
    """Cumulative L2 norm of a sampled signal, one value per sample."""
    v = np.asarray(values, dtype=float)
    if v.ndim == 1:
        v = v[:, None]
    sq = np.sum(v * v, axis=1)
    out = np.zeros(len(sq))
    out[1:] = np.cumsum(0.5 * (sq[1:] + sq[:-1]) * np.diff(times))
    return np.sqrt(out)

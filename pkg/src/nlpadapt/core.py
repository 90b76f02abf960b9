"""Goal-function control law and the finite-form PI estimator.

Notation follows the usual adaptive-control conventions: ``psi`` is the goal
function, ``phi`` the target dynamics, ``alpha`` the monotonicity direction
of the parametrization and ``Gamma`` the (symmetric, positive definite)
adaptation gain. The estimate is realised as

    theta_hat = Gamma (psi*alpha - Psi + theta_I),
    d theta_I / dt = phi(psi) alpha + R,

which needs only the measured state, yet has the same time derivative as the
derivative-dependent law ``Gamma (psi_dot + phi) alpha``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import numdiff
from .errors import SingularControl, TraceTooShort
from .integrate import NEVER, StopCondition, SystemState, Trace, simulate

SINGULARITY_TOL = 1e-9


def _vec(x):
    if type(x) is np.ndarray:
        return x
    if isinstance(x, SystemState):
        return x.x
    return np.asarray(x, dtype=float)


def _arr1(v):
    if type(v) is np.ndarray and v.ndim == 1:
        return v
    return np.atleast_1d(np.asarray(v, dtype=float))


def sign(s):
    """Signum with sign(0) = 0."""
    return np.sign(s)


@dataclass(frozen=True)
class Plant:
    """Control-affine plant ``x1' = f1(x) + g1(x) u``, ``x2' = f2(x, theta) + g2(x) u``."""

    f1: Callable
    f2: Callable
    g1: Callable
    g2: Callable
    theta_true: np.ndarray
    theta_domain: tuple
    q: int

    def __post_init__(self):
        theta = np.atleast_1d(np.asarray(self.theta_true, dtype=float))
        lo, hi = (np.atleast_1d(np.asarray(b, dtype=float)) for b in self.theta_domain)
        if lo.shape != theta.shape or hi.shape != theta.shape:
            raise ValueError("theta_domain bounds must match theta_true")
        if np.any(lo > hi) or np.any(theta < lo) or np.any(theta > hi):
            raise ValueError("theta_true must lie inside theta_domain")
        object.__setattr__(self, "theta_true", theta)
        object.__setattr__(self, "theta_domain", (lo, hi))

    @property
    def d(self) -> int:
        return self.theta_true.size

    def f(self, x, theta):
        x = _vec(x)
        return np.concatenate((_arr1(self.f1(x)), _arr1(self.f2(x, theta))))

    def g(self, x):
        x = _vec(x)
        return np.concatenate((_arr1(self.g1(x)), _arr1(self.g2(x))))


@dataclass(frozen=True)
class GoalFunction:
    psi: Callable
    grad_x: Callable | None = None
    dt: Callable | None = None

    def value(self, x, t) -> float:
        return float(self.psi(_vec(x), t))

    def gradient(self, x, t) -> np.ndarray:
        x = _vec(x)
        if self.grad_x is not None:
            return np.asarray(self.grad_x(x, t), dtype=float)
        return numdiff.jacobian(lambda v: self.psi(v, t), x)

    def partial_t(self, x, t) -> float:
        x = _vec(x)
        if self.dt is not None:
            return float(self.dt(x, t))
        return float(numdiff.time_derivative(self.psi, x, t))

    def gradient_discrepancy(self, x, t) -> float:
        """Relative mismatch between the supplied and a numerical gradient."""
        x = _vec(x)
        num = numdiff.jacobian(lambda v: self.psi(v, t), x)
        ana = self.gradient(x, t)
        return float(np.max(np.abs(num - ana)) / max(1.0, np.max(np.abs(num))))


@dataclass(frozen=True)
class TargetDynamics:
    """Desired closed-loop law ``psi' = -phi(psi, omega, t)``."""

    phi: Callable
    omega: tuple = ()

    def __call__(self, psi, t) -> float:
        return float(self.phi(psi, self.omega, t))


def linear_target(rate=1.0) -> TargetDynamics:
    return TargetDynamics(lambda psi, omega, t: omega[0] * psi, (float(rate),))


@dataclass(frozen=True)
class Parametrization:
    """Scalar uncertainty ``f(x, theta, t)`` together with its estimator data.

    ``q`` is the size of the uncertainty-independent partition; derivatives
    not given analytically are taken by central differences. ``active``, when
    set, marks the region where the monotonicity conditions hold; outside it
    the integral part of the estimator is frozen.
    """

    f: Callable
    alpha: Callable
    D: float = 1.0
    D1: float = 1.0
    q: int = 0
    Psi: Callable | None = None
    Bmat: Callable | None = None
    dalpha_dx: Callable | None = None
    dalpha_dt: Callable | None = None
    dPsi_dx: Callable | None = None
    dPsi_dt: Callable | None = None
    active: Callable | None = None

    def __post_init__(self):
        if not (self.D >= self.D1 > 0):
            raise ValueError("growth constants must satisfy D >= D1 > 0")

    def alpha_at(self, x, t) -> np.ndarray:
        return _arr1(self.alpha(_vec(x), t))

    def Psi_at(self, x, t) -> np.ndarray:
        if self.Psi is None:
            return np.zeros_like(self.alpha_at(x, t))
        return _arr1(self.Psi(_vec(x), t))

    def alpha_jac(self, x, t) -> np.ndarray:
        x = _vec(x)
        if self.dalpha_dx is not None:
            return np.atleast_2d(np.asarray(self.dalpha_dx(x, t), dtype=float))
        return np.atleast_2d(numdiff.jacobian(lambda v: self.alpha_at(v, t), x))

    def alpha_t(self, x, t) -> np.ndarray:
        x = _vec(x)
        if self.dalpha_dt is not None:
            return _arr1(self.dalpha_dt(x, t))
        return np.atleast_1d(numdiff.time_derivative(lambda v, s: self.alpha_at(v, s), x, t))

    def Psi_jac(self, x, t) -> np.ndarray:
        x = _vec(x)
        if self.Psi is None:
            return np.zeros((self.alpha_at(x, t).size, x.size))
        if self.dPsi_dx is not None:
            return np.atleast_2d(np.asarray(self.dPsi_dx(x, t), dtype=float))
        return np.atleast_2d(numdiff.jacobian(lambda v: self.Psi_at(v, t), x))

    def Psi_t(self, x, t) -> np.ndarray:
        x = _vec(x)
        if self.Psi is None:
            return np.zeros_like(self.alpha_at(x, t))
        if self.dPsi_dt is not None:
            return _arr1(self.dPsi_dt(x, t))
        return np.atleast_1d(numdiff.time_derivative(lambda v, s: self.Psi_at(v, s), x, t))

    def B(self, x, t) -> np.ndarray:
        x = _vec(x)
        d = self.alpha_at(x, t).size
        if self.Bmat is None:
            return np.zeros((d, x.size - self.q))
        return np.asarray(self.Bmat(x, t), dtype=float).reshape(d, x.size - self.q)

    def is_active(self, x, t) -> bool:
        return True if self.active is None else bool(self.active(_vec(x), t))


@dataclass(frozen=True)
class EstimatorState:
    theta_I: np.ndarray
    Gamma: np.ndarray

    def __post_init__(self):
        theta_I = np.atleast_1d(np.asarray(self.theta_I, dtype=float))
        Gamma = np.atleast_2d(np.asarray(self.Gamma, dtype=float))
        if Gamma.shape != (theta_I.size, theta_I.size):
            raise ValueError("Gamma must be d x d")
        if not np.allclose(Gamma, Gamma.T):
            raise ValueError("Gamma must be symmetric")
        np.linalg.cholesky(Gamma)  # raises LinAlgError if not positive definite
        if not np.all(np.isfinite(theta_I)):
            raise ValueError("theta_I must be finite")
        object.__setattr__(self, "theta_I", theta_I)
        object.__setattr__(self, "Gamma", Gamma)


@dataclass(frozen=True)
class Disturbance:
    """Additive perturbation of the goal-function dynamics."""

    eps: Callable | None = None

    def __call__(self, t) -> float:
        return 0.0 if self.eps is None else float(self.eps(t))

    def l2_tail(self, t, horizon=np.inf) -> float:
        """``||eps||_2`` over ``[t, horizon]``."""
        if self.eps is None:
            return 0.0
        from scipy.integrate import quad

        val, _ = quad(lambda s: self.eps(s) ** 2, t, horizon, limit=200)
        return float(np.sqrt(max(val, 0.0)))

    def l2(self, t0, t1) -> float:
        return self.l2_tail(t0, t1)


@dataclass(frozen=True)
class ExpDecay(Disturbance):
    """``eps(t) = amplitude * exp(-rate * t)`` with closed-form tail norms."""

    eps: Callable | None = field(default=None, init=False, repr=False)
    amplitude: float = 0.0
    rate: float = 1.0

    def __call__(self, t) -> float:
        return self.amplitude * math.exp(-self.rate * t)

    def l2_tail(self, t, horizon=np.inf) -> float:
        a, b = self.amplitude, self.rate
        if a == 0.0:
            return 0.0
        upper = 0.0 if math.isinf(horizon) else math.exp(-2 * b * horizon)
        return abs(a) * math.sqrt(max(math.exp(-2 * b * t) - upper, 0.0) / (2 * b))


# ---------------------------------------------------------------------------
# operations


def lie_f(plant: Plant, goal: GoalFunction, x, theta, t) -> float:
    """``L_f psi`` for the drift evaluated at parameter ``theta``."""
    return float(goal.gradient(x, t) @ plant.f(x, theta))


def control_input(plant, goal, target, theta_hat, x, t, tol=SINGULARITY_TOL) -> float:
    """Certainty-equivalence input placing psi on the target dynamics."""
    x = _vec(x)
    grad = goal.gradient(x, t)
    lg = float(grad @ plant.g(x))
    if abs(lg) <= tol:
        raise SingularControl(f"|L_g psi| = {abs(lg):.3g} at t={t:.6g}")
    lf = float(grad @ plant.f(x, theta_hat))
    psi = goal.value(x, t)
    return (-lf - target(psi, t) - goal.partial_t(x, t)) / lg


def theta_hat(goal, parm, est: EstimatorState, x, t) -> np.ndarray:
    x = _vec(x)
    proportional = goal.value(x, t) * parm.alpha_at(x, t) - parm.Psi_at(x, t)
    return est.Gamma @ (proportional + est.theta_I)


def r_correction(plant, goal, parm, theta_hat, u, x, t, psi=None) -> np.ndarray:
    """Correction term cancelling the known vector fields in d(theta_hat)/dt."""
    x = _vec(x)
    q = parm.q
    if psi is None:
        psi = goal.value(x, t)
    r = parm.Psi_t(x, t) - psi * parm.alpha_t(x, t)
    if q:
        ja = parm.alpha_jac(x, t)[:, :q]
        f1 = _arr1(plant.f1(x))
        g1 = _arr1(plant.g1(x))
        r = r - psi * (ja @ (f1 + g1 * u))
        if parm.Psi is not None:
            jp = parm.Psi_jac(x, t)[:, :q]
            r = r + jp @ (f1 + g1 * u)
    if parm.Bmat is not None:
        B = parm.B(x, t)
        r = r + B @ (np.atleast_1d(plant.f2(x, theta_hat)) + np.atleast_1d(plant.g2(x)) * u)
    return r


def estimator_rhs(goal, target, parm, plant, est, x, u, t) -> np.ndarray:
    """Time derivative of the integral part of the estimate."""
    x = _vec(x)
    if not parm.is_active(x, t):
        return np.zeros_like(est.theta_I)
    th = theta_hat(goal, parm, est, x, t)
    psi = goal.value(x, t)
    return target(psi, t) * parm.alpha_at(x, t) + r_correction(plant, goal, parm, th, u, x, t)


def lyapunov_value(theta_hat, theta_true, Gamma, eps_l2_tail, D, D1) -> float:
    e = np.atleast_1d(np.asarray(theta_hat, dtype=float) - np.asarray(theta_true, dtype=float))
    Gamma = np.atleast_2d(np.asarray(Gamma, dtype=float))
    quad = float(e @ np.linalg.solve(Gamma, e))
    return 0.5 * quad + D / (4.0 * D1**2) * eps_l2_tail**2


def gamma_norm_sq(err, Gamma) -> np.ndarray:
    """Row-wise ``||err||^2`` in the ``Gamma^{-1}`` metric."""
    err = np.atleast_2d(np.asarray(err, dtype=float))
    Gamma = np.atleast_2d(np.asarray(Gamma, dtype=float))
    sol = np.linalg.solve(Gamma, err.T).T
    return np.sum(err * sol, axis=1)


def mismatch_l2_bound(theta_hat0, theta_true, Gamma, D, eps_l2, D1) -> float:
    """Upper bound on the L2 norm of ``f(x,theta) - f(x,theta_hat)``."""
    quad = float(gamma_norm_sq(np.asarray(theta_true, dtype=float) - np.asarray(theta_hat0, dtype=float), Gamma)[0])
    return float(np.sqrt(0.5 * D * quad) + D / D1 * eps_l2)


def parametric_norm_bound(theta_hat0, theta_true, Gamma, D, eps_l2, D1) -> float:
    """Bound on ``||theta_hat(t) - theta||^2`` in the ``Gamma^{-1}`` metric."""
    quad = float(gamma_norm_sq(np.asarray(theta_hat0, dtype=float) - np.asarray(theta_true, dtype=float), Gamma)[0])
    return quad + D / (2 * D1**2) * eps_l2**2


@dataclass(frozen=True)
class EquivalenceCheck:
    residual: float
    samples: int
    tol: float | None = None

    @property
    def ok(self) -> bool:
        return self.tol is None or self.residual <= self.tol


def virtual_equivalence_check(trace: Trace, parm=None, plant=None, tol=None, settle=None) -> EquivalenceCheck:
    """Compare d(theta_hat)/dt with ``Gamma((psi_dot + phi) alpha - B df2)``.

    Both derivatives are centered differences over the recorded samples.
    Samples next to a jump in the true parameter, or where adaptation is
    gated off, are skipped. ``settle`` (default ``trace.meta["switch_settle"]``
    or 0) additionally drops the samples that far past each jump, where a fast
    error transient keeps the difference quotients out of their asymptotic
    regime.
    """
    n = len(trace)
    if n < 3:
        raise TraceTooShort("need at least 3 samples")
    t = trace.times
    th = trace.channel("theta_hat")
    psi = trace.channel("psi")[:, 0]
    phi = trace.channel("phi")[:, 0]
    alpha = trace.channel("alpha")
    Gamma = np.atleast_2d(trace.meta["Gamma"])
    lhs = numdiff.centered(th, t)
    psidot = numdiff.centered(psi, t)
    rhs = (psidot + phi[1:-1])[:, None] * alpha[1:-1]
    if parm is not None and parm.Bmat is not None and plant is not None:
        truth = trace.channel("theta_true")
        for k in range(n - 2):
            i = k + 1
            x = trace.x[i]
            df2 = np.atleast_1d(plant.f2(x, truth[i])) - np.atleast_1d(plant.f2(x, th[i]))
            rhs[k] -= parm.B(x, t[i]) @ df2
    rhs = rhs @ Gamma.T
    mask = np.ones(n - 2, dtype=bool)
    if "theta_true" in trace.channels:
        truth = trace.channel("theta_true")
        mask &= np.all(truth[2:] == truth[:-2], axis=1)
        if settle is None:
            settle = trace.meta.get("switch_settle", 0.0)
        if settle > 0:
            jumps = t[1:][np.any(truth[1:] != truth[:-1], axis=1)]
            mid = t[1:-1]
            for s in jumps:
                mask &= ~((mid > s) & (mid <= s + settle))
    if "adapt_active" in trace.channels:
        act = trace.channel("adapt_active")[:, 0] > 0.5
        mask &= act[2:] & act[1:-1] & act[:-2]
    if not np.any(mask):
        raise TraceTooShort("no admissible interior samples")
    resid = float(np.max(np.abs(lhs[mask] - rhs[mask])))
    return EquivalenceCheck(resid, int(mask.sum()), tol)


# ---------------------------------------------------------------------------
# closed loop


@dataclass
class ClosedLoop:
    """Plant, control law and finite-form estimator as one augmented ODE.

    The integrated vector is ``[x, theta_I]``. The disturbance is injected
    through the input channel scaled by ``1/L_g psi``, which shifts psi' by
    exactly ``eps(t)``. Each right-hand-side evaluation computes every shared
    quantity once; the result agrees with composing ``control_input``,
    ``theta_hat`` and ``estimator_rhs``.
    """

    plant: Plant
    goal: GoalFunction
    target: TargetDynamics
    parm: Parametrization
    Gamma: np.ndarray
    disturbance: Disturbance = field(default_factory=Disturbance)
    name: str = ""

    def __post_init__(self):
        self.Gamma = np.atleast_2d(np.asarray(self.Gamma, dtype=float))
        EstimatorState(np.zeros(self.Gamma.shape[0]), self.Gamma)
        self._Gamma_inv = np.linalg.inv(self.Gamma)
        self._n = None

    def initial_theta_I(self, x0, t0, theta_hat0) -> np.ndarray:
        x0 = _vec(x0)
        prop = self.goal.value(x0, t0) * self.parm.alpha_at(x0, t0) - self.parm.Psi_at(x0, t0)
        return self._Gamma_inv @ np.atleast_1d(np.asarray(theta_hat0, dtype=float)) - prop

    def _stage(self, t, y):
        n = self._n
        x, theta_I = y[:n], y[n:]
        plant, goal, parm = self.plant, self.goal, self.parm
        psi = goal.value(x, t)
        grad = goal.gradient(x, t)
        alpha = parm.alpha_at(x, t)
        th = self.Gamma @ (psi * alpha - parm.Psi_at(x, t) + theta_I)
        g = plant.g(x)
        lg = float(grad @ g)
        if abs(lg) <= SINGULARITY_TOL:
            raise SingularControl(f"|L_g psi| = {abs(lg):.3g} at t={t:.6g}")
        phi = self.target(psi, t)
        u = (-float(grad @ plant.f(x, th)) - phi - goal.partial_t(x, t)) / lg
        return x, theta_I, psi, alpha, th, g, lg, phi, u

    def rhs(self, t, y):
        x, theta_I, psi, alpha, th, g, lg, phi, u = self._stage(t, y)
        eps = self.disturbance(t)
        u_applied = u + eps / lg if eps != 0.0 else u
        xdot = self.plant.f(x, self.plant.theta_true) + g * u_applied
        if self.parm.is_active(x, t):
            thdot = phi * alpha + r_correction(self.plant, self.goal, self.parm, th, u, x, t, psi)
        else:
            thdot = np.zeros_like(theta_I)
        return np.concatenate([xdot, thdot])

    def observe(self, t, y):
        x, theta_I, psi, alpha, th, g, lg, phi, u = self._stage(t, y)
        theta = self.plant.theta_true
        err = th - theta
        tail = self.disturbance.l2_tail(t)
        parm = self.parm
        return {
            "psi": psi,
            "u": u,
            "theta_hat": th,
            "theta_true": theta,
            "alpha": alpha,
            "phi": phi,
            "mismatch": parm.f(x, theta, t) - parm.f(x, th, t),
            "eps": self.disturbance(t),
            "V": 0.5 * float(err @ self._Gamma_inv @ err) + parm.D / (4.0 * parm.D1**2) * tail**2,
            "adapt_active": 1.0 if parm.is_active(x, t) else 0.0,
        }

    def run(self, x0, theta_hat0, t0=0.0, tf=10.0, h=1e-3, stop: StopCondition = NEVER) -> Trace:
        x0 = _vec(x0)
        self._n = x0.size
        y0 = np.concatenate([x0, self.initial_theta_I(x0, t0, theta_hat0)])
        trace = simulate(self.rhs, y0, t0, tf, h, stop=stop, observers=self.observe, q=self.plant.q, n=x0.size)
        trace.meta.update(
            name=self.name,
            Gamma=self.Gamma,
            D=self.parm.D,
            D1=self.parm.D1,
            theta_true=self.plant.theta_true,
            h=h,
        )
        return trace

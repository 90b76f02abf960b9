"""Grid-based witnesses for the standing assumptions on a parametrization."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from . import numdiff
from .core import GoalFunction, Parametrization, TargetDynamics, _vec
from .errors import DegenerateGrid, DependenceViolation, Diverged
from .integrate import simulate

VIOLATION_TOL = 1e-12
DENOM_TOL = 1e-12
DEPENDENCE_TOL = 1e-8
QUAD_TOL = 1e-8


def product_grid(bounds, n=20) -> np.ndarray:
    """Rows of an even product grid over the box ``bounds = [(lo, hi), ...]``."""
    axes = [np.linspace(lo, hi, n) if hi > lo else np.array([lo]) for lo, hi in bounds]
    return np.array(list(itertools.product(*axes)), dtype=float).reshape(-1, len(bounds))


def all_pairs(thetas) -> list:
    th = np.asarray(thetas, dtype=float)
    if th.ndim == 1:
        th = th[:, None]
    return [(a, b) for a in th for b in th]


def _tuples(x_grid, theta_pairs):
    X = np.atleast_2d(np.asarray(x_grid, dtype=float))
    if not len(theta_pairs) or not X.size:
        raise DegenerateGrid("empty grid")
    hat = np.array([np.atleast_1d(np.asarray(a, dtype=float)) for a, _ in theta_pairs])
    true = np.array([np.atleast_1d(np.asarray(b, dtype=float)) for _, b in theta_pairs])
    nx, npair = X.shape[0], hat.shape[0]
    Xr = np.repeat(X, npair, axis=0)
    return Xr, np.tile(hat, (nx, 1)), np.tile(true, (nx, 1))


def _evaluate(parm: Parametrization, X, TH_hat, TH, t):
    """``f(theta_hat) - f(theta)`` and ``alpha^T (theta_hat - theta)`` on all tuples.

    Tries one broadcast call with components along axis 0 and falls back to
    a per-tuple loop for parametrizations written for single points.
    """
    N = X.shape[0]
    try:
        df = np.asarray(parm.f(X.T, TH_hat.T, t), dtype=float) - np.asarray(parm.f(X.T, TH.T, t), dtype=float)
        alpha = np.asarray(parm.alpha(X.T, t), dtype=float).reshape(TH.shape[1], -1)
        if df.shape != (N,) or alpha.shape[1] != N:
            raise ValueError
        proj = np.sum(alpha.T * (TH_hat - TH), axis=1)
        return df, proj
    except (TypeError, ValueError, IndexError):
        df = np.empty(N)
        proj = np.empty(N)
        for i in range(N):
            x = X[i]
            df[i] = parm.f(x, TH_hat[i], t) - parm.f(x, TH[i], t)
            proj[i] = float(parm.alpha_at(x, t) @ (TH_hat[i] - TH[i]))
        return df, proj


@dataclass
class MonotonicityReport:
    margin: float
    evaluated: int
    n_violations: int = 0
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.n_violations == 0


def check_monotonicity(parm: Parametrization, x_grid, theta_pairs, t=0.0, max_listed=20) -> MonotonicityReport:
    """Sign of ``(f(x,theta_hat) - f(x,theta)) * alpha^T (theta_hat - theta)`` over all tuples.

    Values below ``-1e-12`` count as violations; the first ``max_listed``
    are returned as ``(x, theta_hat, theta, value)``.
    """
    X, H, T = _tuples(x_grid, theta_pairs)
    df, proj = _evaluate(parm, X, H, T, t)
    prod = df * proj
    bad = np.nonzero(prod < -VIOLATION_TOL)[0]
    listed = [(X[i], H[i], T[i], float(prod[i])) for i in bad[:max_listed]]
    return MonotonicityReport(float(prod.min()), int(prod.size), int(bad.size), listed)


def estimate_growth_bounds(parm: Parametrization, x_grid, theta_pairs, t=0.0):
    """Largest and smallest ratio ``|f(theta_hat) - f(theta)| / |alpha^T (theta_hat - theta)|``."""
    X, H, T = _tuples(x_grid, theta_pairs)
    df, proj = _evaluate(parm, X, H, T, t)
    keep = np.abs(proj) > DENOM_TOL
    if not np.any(keep):
        raise DegenerateGrid("every tuple has a vanishing projection")
    ratio = np.abs(df[keep]) / np.abs(proj[keep])
    return float(ratio.max()), float(ratio.min())


def realizability_residual(parm: Parametrization, goal: GoalFunction, x, t=0.0) -> np.ndarray:
    """``dPsi/dx2 - psi * dalpha/dx2 - B`` as a d x p matrix."""
    x = _vec(x)
    q = parm.q
    psi = goal.value(x, t)
    return parm.Psi_jac(x, t)[:, q:] - psi * parm.alpha_jac(x, t)[:, q:] - parm.B(x, t)


def _poincare_field(parm, goal, x, t, i):
    q = parm.q
    return goal.value(x, t) * parm.alpha_jac(x, t)[i, q:] + parm.B(x, t)[i]


def poincare_check(parm: Parametrization, goal: GoalFunction, x_grid, t=0.0) -> float:
    """Largest asymmetry of ``d/dx2 (psi * dalpha_i/dx2 + B_i)`` over the grid.

    A symmetric Jacobian for every component ``i`` is the integrability
    condition for a compensator ``Psi`` to exist.
    """
    worst = 0.0
    q = parm.q
    for x in np.atleast_2d(np.asarray(x_grid, dtype=float)):
        d = parm.alpha_at(x, t).size

        for i in range(d):
            def field_x2(x2, i=i, x=x):
                full = np.concatenate([x[:q], x2])
                return _poincare_field(parm, goal, full, t, i)

            M = np.atleast_2d(numdiff.jacobian(field_x2, x[q:]))
            worst = max(worst, float(np.max(np.abs(M - M.T))))
    return worst


def _check_single_dependence(parm, goal, k, x, t):
    q = parm.q
    p = x.size - q
    for j in range(p):
        if j == k:
            continue
        idx = q + j

        def along(v, idx=idx):
            y = x.copy()
            y[idx] = v[0]
            return np.concatenate([[goal.value(y, t)], parm.alpha_at(y, t)])

        grad = numdiff.jacobian(along, x[idx : idx + 1])
        if np.max(np.abs(grad)) > DEPENDENCE_TOL:
            raise DependenceViolation(f"psi or alpha depends on x2[{j}] besides x2[{k}]")


def psi_by_quadrature(parm: Parametrization, goal: GoalFunction, k: int, x, t=0.0) -> np.ndarray:
    """Compensator ``int_0^{x2_k} psi * dalpha/dx2_k ds`` for single-component dependence."""
    x = _vec(x).astype(float)
    _check_single_dependence(parm, goal, k, x, t)
    idx = parm.q + k
    d = parm.alpha_at(x, t).size

    def integrand(s, i):
        y = x.copy()
        y[idx] = s
        return goal.value(y, t) * parm.alpha_jac(y, t)[i, idx]

    out = np.empty(d)
    for i in range(d):
        val, _ = quad(integrand, 0.0, x[idx], args=(i,), epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200)
        out[i] = val
    return out


def quadrature_compensator(parm: Parametrization, goal: GoalFunction, k: int):
    """``Psi(x, t)`` built by quadrature, ready to plug into a parametrization."""
    return lambda x, t: psi_by_quadrature(parm, goal, k, x, t)


@dataclass
class GainRow:
    psi0: float
    zeta: str
    zeta_l2: float
    psi_inf: float
    diverged: bool


def empirical_gain(target: TargetDynamics, zeta_bank: dict, psi0_grid, tf=10.0, h=1e-3, blowup=1e3) -> list:
    """Observed ``sup |psi|`` of ``psi' = -phi(psi) + zeta`` against ``||zeta||_2``.

    Runs whose state exceeds ``blowup`` are flagged as diverged.
    """
    rows = []
    for name, zeta in zeta_bank.items():
        ts = np.linspace(0.0, tf, int(round(tf / h)) + 1)
        z = np.array([zeta(s) for s in ts])
        if not np.all(np.isfinite(z)):
            raise ValueError(f"test input {name!r} is not finite")
        zl2 = float(math.sqrt(np.trapezoid(z * z, ts)))
        for psi0 in psi0_grid:
            def rhs(t, y, zeta=zeta):
                return np.array([-target(y[0], t) + zeta(t)])

            try:
                tr = simulate(rhs, np.array([float(psi0)]), 0.0, tf, h, cap=blowup)
                rows.append(GainRow(float(psi0), name, zl2, float(np.max(np.abs(tr.states[:, 0]))), False))
            except Diverged as exc:
                part = exc.trace.states[:, 0] if exc.trace is not None and len(exc.trace) else [np.inf]
                rows.append(GainRow(float(psi0), name, zl2, float(np.max(np.abs(part))), True))
    return rows

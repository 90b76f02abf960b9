"""Persistent-excitation monitoring and the exponential-rate certificate."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import InsufficientSpan, WindowOutOfRange
from .integrate import Trace
from .linalg import jacobi_eigvals

ALPHA_INFLATION = 1.05


def _outer_rows(values):
    v = np.asarray(values, dtype=float)
    if v.ndim == 1:
        v = v[:, None]
    return v[:, :, None] * v[:, None, :]


def gram_from_samples(times, values, ta, tb) -> np.ndarray:
    """Trapezoid approximation of the integral of ``a a^T`` over [ta, tb].

    Window ends falling between samples are handled by linear interpolation
    of the signal.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if v.ndim == 1:
        v = v[:, None]
    tol = 1e-9 * max(1.0, abs(t[-1]))
    if not tb > ta or ta < t[0] - tol or tb > t[-1] + tol:
        raise WindowOutOfRange(f"window [{ta}, {tb}] not inside [{t[0]}, {t[-1]}]")
    ta, tb = max(ta, t[0]), min(tb, t[-1])
    inside = (t > ta) & (t < tb)
    ts = np.concatenate([[ta], t[inside], [tb]])
    ends = [np.array([np.interp(e, t, col) for col in v.T]) for e in (ta, tb)]
    vs = np.vstack([ends[0][None, :], v[inside], ends[1][None, :]])
    g = np.trapezoid(_outer_rows(vs), ts, axis=0)
    return 0.5 * (g + g.T)


def gram_window(trace: Trace, channel="alpha", window=None) -> np.ndarray:
    if window is None:
        window = (trace.times[0], trace.times[-1])
    return gram_from_samples(trace.times, trace.channel(channel), *window)


@dataclass(frozen=True)
class PEVerdict:
    satisfied: bool
    lambda_min: float


def pe_verdict(gram, delta) -> PEVerdict:
    """``lambda_min(gram) >= delta``, boundary included."""
    lam = float(jacobi_eigvals(gram)[0])
    return PEVerdict(lam >= delta, lam)


@dataclass(frozen=True)
class PEWindow:
    L: float
    delta: float

    def __post_init__(self):
        if not self.L > 0 or not self.delta > 0:
            raise ValueError("L and delta must be positive")


@dataclass
class PEMeasurement:
    """Sliding-window Gram minima over a trace.

    ``ends[k]`` is the right end of window ``k``; ``lambda_min[k]`` its
    smallest eigenvalue; ``delta`` the infimum over all full windows.
    """

    L: float
    ends: np.ndarray
    lambda_min: np.ndarray
    delta: float
    series: np.ndarray = field(repr=False, default=None)

    def verdict(self, delta) -> PEVerdict:
        return PEVerdict(self.delta >= delta, self.delta)


def sliding_lambda_min(trace: Trace, L: float, channel="alpha", stride=1) -> PEMeasurement:
    """Smallest Gram eigenvalue over every window ``[t - L, t]`` ending on a sample.

    Whole sample intervals come from a cumulative trapezoid sum; the partial
    interval at the left end uses the linearly interpolated signal, so each
    window agrees with :func:`gram_window` on the same interval. ``series``
    has one entry per sample, NaN until the first full window.
    """
    t = trace.times
    if not L > 0:
        raise ValueError("L must be positive")
    if t[-1] - t[0] < L * (1 - 1e-12):
        raise InsufficientSpan(f"trace span {t[-1] - t[0]:.6g} shorter than L={L}")
    v = trace.channel(channel)
    outer = _outer_rows(v)
    cum = np.zeros_like(outer)
    cum[1:] = np.cumsum(0.5 * (outer[1:] + outer[:-1]) * np.diff(t)[:, None, None], axis=0)
    first = int(np.searchsorted(t, t[0] + L - 1e-9 * max(1.0, L)))
    idx = np.arange(first, len(t), stride)
    left = np.maximum(t[idx] - L, t[0])
    j = np.clip(np.searchsorted(t, left, side="right") - 1, 0, len(t) - 2)
    w = ((left - t[j]) / (t[j + 1] - t[j]))[:, None]
    v_left = (1 - w) * v[j] + w * v[j + 1]
    part = 0.5 * (v_left[:, :, None] * v_left[:, None, :] + outer[j + 1]) * (t[j + 1] - left)[:, None, None]
    grams = cum[idx] - cum[j + 1] + part
    series = np.full(len(t), np.nan)
    lam = np.array([jacobi_eigvals(0.5 * (g + g.T))[0] for g in grams])
    series[idx] = lam
    return PEMeasurement(L, t[idx], lam, float(lam.min()), series)


@dataclass(frozen=True)
class RateCertificate:
    rho: float
    D_Gamma: float
    alpha_inf: float
    inputs: dict

    def bound(self, t, t0, err0):
        return self.D_Gamma * np.exp(-self.rho * (np.asarray(t) - t0)) * err0


def convergence_rate(delta, L, D, D1, Gamma, alpha_inf) -> RateCertificate:
    """Exponential rate at which the estimate provably approaches the truth."""
    for name, v in (("delta", delta), ("L", L), ("D", D), ("D1", D1), ("alpha_inf", alpha_inf)):
        if not v > 0:
            raise ValueError(f"{name} must be positive")
    Gamma = np.atleast_2d(np.asarray(Gamma, dtype=float))
    np.linalg.cholesky(Gamma)
    ev = jacobi_eigvals(Gamma)
    lmin, lmax = float(ev[0]), float(ev[-1])
    rho = delta * D1 * lmin / (2 * L * (1 + lmax**2 * L**2 * D**2 * alpha_inf**4))
    inputs = dict(delta=delta, L=L, D=D, D1=D1, lambda_min=lmin, lambda_max=lmax)
    return RateCertificate(rho, math.sqrt(lmax / lmin), alpha_inf, inputs)


def alpha_infinity(trace: Trace, channel="alpha", inflation=ALPHA_INFLATION) -> float:
    a = trace.channel(channel)
    return float(np.max(np.sqrt(np.sum(a * a, axis=1)))) * inflation


def parameter_error(trace: Trace) -> np.ndarray:
    return np.linalg.norm(trace.channel("theta_hat") - trace.channel("theta_true"), axis=1)


def rate_violations(trace: Trace, cert: RateCertificate, atol=0.0) -> np.ndarray:
    """Sample indices where the observed error exceeds the certified envelope."""
    err = parameter_error(trace)
    bound = cert.bound(trace.times, trace.times[0], err[0])
    return np.nonzero(err > bound + atol)[0]


@dataclass
class ProbeResult:
    """Per-pair excitation levels and their non-decreasing lower envelope."""

    distances: np.ndarray
    levels: np.ndarray
    envelope: np.ndarray

    def at(self, d) -> float:
        """Envelope value at distance ``d``: the least level among pairs at least that far apart."""
        k = int(np.searchsorted(self.distances, d, side="left"))
        if k >= self.distances.size:
            return float(self.envelope[-1])
        return float(self.envelope[k])

    def binned(self, edges) -> np.ndarray:
        return np.array([self.at(e) for e in edges])


def nonlinear_pe_probe(f, trace: Trace, theta_pairs, L: float, stride=1) -> ProbeResult:
    """Empirical witness for excitation with respect to parameters.

    For each pair the level is the minimum over sliding windows of length
    ``L`` of the maximum of ``|f(x, th1, t) - f(x, th2, t)|`` in the window.
    The envelope is the greatest non-decreasing minorant of the levels when
    ordered by parameter distance.
    """
    t = trace.times[::stride]
    if t[-1] - t[0] < L * (1 - 1e-12):
        raise InsufficientSpan(f"trace span {t[-1] - t[0]:.6g} shorter than L={L}")
    pairs = list(theta_pairs)
    if not pairs:
        raise ValueError("no parameter pairs")
    xs = trace.x[::stride]
    h = np.median(np.diff(t)) if t.size > 1 else L
    w = max(1, int(round(L / h)) + 1)
    dist = np.empty(len(pairs))
    level = np.empty(len(pairs))
    for k, (a, b) in enumerate(pairs):
        a = np.atleast_1d(np.asarray(a, dtype=float))
        b = np.atleast_1d(np.asarray(b, dtype=float))
        dist[k] = float(np.linalg.norm(a - b))
        diff = np.array([abs(f(x, a, tt) - f(x, b, tt)) for x, tt in zip(xs, t)])
        w_k = min(w, diff.size)
        level[k] = float(sliding_window_view(diff, w_k).max(axis=1).min())
    order = np.argsort(dist, kind="stable")
    dist, level = dist[order], level[order]
    envelope = np.minimum.accumulate(level[::-1])[::-1]
    return ProbeResult(dist, level, envelope)

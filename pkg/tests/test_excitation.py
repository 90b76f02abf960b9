import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nlpadapt.errors import InsufficientSpan, WindowOutOfRange
from nlpadapt.excitation import (
    PEWindow,
    alpha_infinity,
    convergence_rate,
    gram_from_samples,
    gram_window,
    nonlinear_pe_probe,
    pe_verdict,
    rate_violations,
    sliding_lambda_min,
)
from nlpadapt.integrate import Trace
from nlpadapt.linalg import jacobi_eigvals
from nlpadapt.scenarios import linear, sine


def _harmonic_trace(h=1e-3, tf=2 * np.pi):
    t = np.arange(0.0, tf + h / 2, h)
    if t[-1] < tf:
        t = np.append(t, tf)
    a = np.column_stack([np.sin(t), np.cos(t)])
    return Trace(t, a, {"alpha": a})


def test_gram_of_harmonic_regressor():
    g = gram_window(_harmonic_trace(), "alpha", (0.0, 2 * np.pi))
    np.testing.assert_allclose(g, np.pi * np.eye(2), atol=1e-6)
    assert pe_verdict(g, 1.0).satisfied
    assert pe_verdict(g, 1.0).lambda_min == pytest.approx(np.pi, abs=1e-6)


def test_gram_interpolates_window_ends():
    tr = _harmonic_trace(h=1e-3, tf=7.0)
    g = gram_window(tr, "alpha", (0.0005, 0.0005 + 2 * np.pi))
    assert jacobi_eigvals(g)[0] == pytest.approx(np.pi, abs=1e-5)


def test_gram_zero_and_rank_one():
    t = np.linspace(0, 1, 101)
    assert np.all(gram_from_samples(t, np.zeros((101, 2)), 0.0, 1.0) == 0.0)
    g = gram_from_samples(t, np.ones((101, 2)), 0.0, 1.0)
    np.testing.assert_allclose(g, np.ones((2, 2)))
    v = pe_verdict(g, 0.1)
    assert not v.satisfied and abs(v.lambda_min) < 1e-12


def test_gram_window_out_of_range():
    t = np.linspace(0, 1, 11)
    with pytest.raises(WindowOutOfRange):
        gram_from_samples(t, np.ones(11), 0.5, 1.5)
    with pytest.raises(WindowOutOfRange):
        gram_from_samples(t, np.ones(11), 0.5, 0.5)


def test_verdict_boundary_inclusive():
    assert pe_verdict(0.7 * np.eye(3), 0.7).satisfied


@given(st.floats(0.0, 5.0), st.floats(0.0, 5.0))
def test_verdict_monotone_in_delta(d1, d2):
    g = np.array([[2.0, 0.5], [0.5, 1.0]])
    lo, hi = sorted((d1, d2))
    if pe_verdict(g, hi).satisfied:
        assert pe_verdict(g, lo).satisfied


@given(st.integers(0, 10_000))
def test_gram_is_symmetric_psd(seed):
    rng = np.random.default_rng(seed)
    t = np.sort(rng.uniform(0, 3, 40))
    t = np.unique(t)
    v = rng.normal(size=(t.size, 3))
    g = gram_from_samples(t, v, t[0], t[-1])
    assert np.array_equal(g, g.T)
    assert jacobi_eigvals(g)[0] >= -1e-10


def test_pe_window_validation():
    with pytest.raises(ValueError):
        PEWindow(0.0, 1.0)


def test_sliding_minimum_matches_window_gram():
    tr = _harmonic_trace(h=1e-2, tf=10.0)
    m = sliding_lambda_min(tr, 2 * np.pi)
    assert m.delta == pytest.approx(np.pi, rel=1e-3)
    assert np.isnan(m.series[0]) and not np.isnan(m.series[-1])
    k = len(m.ends) // 2
    direct = jacobi_eigvals(gram_window(tr, "alpha", (m.ends[k] - 2 * np.pi, m.ends[k])))[0]
    assert m.lambda_min[k] == pytest.approx(direct, abs=1e-9)
    with pytest.raises(InsufficientSpan):
        sliding_lambda_min(tr, 20.0)


def test_rate_certificate_example():
    c = convergence_rate(np.pi, 2 * np.pi, 1.0, 1.0, np.eye(2), 1.0)
    assert c.rho == pytest.approx(np.pi / (4 * np.pi * (1 + 4 * np.pi**2)), rel=1e-12)
    assert c.rho == pytest.approx(6.177e-3, abs=1e-6)
    assert c.D_Gamma == 1.0


@given(st.floats(0.1, 10.0))
def test_rate_certificate_gamma_scaling(scale):
    G = np.diag([1.0, 2.0])
    c = convergence_rate(1.0, 2.0, 1.5, 1.0, scale * G, 0.8)
    lmin, lmax = scale * 1.0, scale * 2.0
    rho = 1.0 * 1.0 * lmin / (2 * 2.0 * (1 + lmax**2 * 4.0 * 1.5**2 * 0.8**4))
    assert c.rho == pytest.approx(rho, rel=1e-10)
    assert c.D_Gamma == pytest.approx(math.sqrt(2.0), rel=1e-12)


def test_rate_certificate_rejects_bad_inputs():
    with pytest.raises(ValueError):
        convergence_rate(0.0, 1.0, 1.0, 1.0, np.eye(1), 1.0)
    with pytest.raises(np.linalg.LinAlgError):
        convergence_rate(1.0, 1.0, 1.0, 1.0, -np.eye(1), 1.0)


def test_alpha_infinity_inflation():
    tr = _harmonic_trace(h=1e-2)
    assert alpha_infinity(tr) == pytest.approx(1.05, rel=1e-12)
    assert alpha_infinity(tr, inflation=1.0) == pytest.approx(1.0, rel=1e-12)


def test_linear_probe_envelope():
    cfg = linear.LinearConfig()
    tr = linear.run(cfg, tf=15.0, h=1e-2)
    parm = linear.parametrization(cfg)
    grid = [np.array([a, b]) for a in (-1.0, 0.0, 1.0) for b in (-1.0, 0.0, 1.0)]
    pairs = [(p, q) for p in grid for q in grid]
    res = nonlinear_pe_probe(parm.f, tr, pairs, 2 * np.pi, stride=5)
    assert res.at(0.0) == 0.0
    assert np.all(np.diff(res.envelope) >= 0)
    # |alpha^T (th1 - th2)| peaks at ||th1 - th2|| over a full period
    positive = res.distances > 0
    assert np.all(res.levels[positive] >= 0.99 * res.distances[positive])
    assert res.binned([0.5, 1.0])[0] > 0


def test_sine_probe_positive_inside_middle_band():
    cfg = sine.SineConfig(amp=0.8)
    tr = sine.run(cfg, tf=12.0, h=1e-2)
    parm = sine.parametrization(cfg)
    thetas = np.linspace(0.6, 1.4, 5)
    pairs = [(np.array([a]), np.array([b])) for a in thetas for b in thetas if a != b]
    res = nonlinear_pe_probe(parm.f, tr, pairs, 2 * np.pi, stride=5)
    assert np.all(res.envelope > 0)


def test_rate_violations_flag_slow_decay():
    t = np.linspace(0, 10, 101)
    th = np.exp(-0.01 * t)[:, None]
    tr = Trace(t, np.zeros((101, 1)), {"theta_hat": th, "theta_true": np.zeros((101, 1))})
    fast = convergence_rate(10.0, 1.0, 1.0, 1.0, np.eye(1), 0.1)
    assert rate_violations(tr, fast).size > 0
    slow = convergence_rate(1e-3, 1.0, 1.0, 1.0, np.eye(1), 1.0)
    assert rate_violations(tr, slow).size == 0

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nlpadapt.report import gamma_error
from nlpadapt.scenarios import REGISTRY, get, linear, sine, spring
from nlpadapt.verify import all_pairs, check_monotonicity


def test_spring_rhs_example():
    np.testing.assert_allclose(spring.spring_mass_rhs((1.0, 0.0), 0.5, 0.0, k0=-1.0), [0.0, -1.0])


def test_spring_rhs_damping_override():
    out = spring.spring_mass_rhs((0.0, 2.0), 0.5, 1.0, t=3.0, damping=lambda v, t: v * t)
    np.testing.assert_allclose(out, [2.0, 7.0])


def test_spring_state_bound_example():
    assert spring.state_bound(1.0, 1.0, 0.5) == pytest.approx(3.5)


@pytest.mark.parametrize("kw", [dict(k0=0.0), dict(k0=1.0), dict(lam=0.0), dict(gamma=-1.0)])
def test_spring_config_rejects(kw):
    with pytest.raises(ValueError):
        spring.SpringConfig(**kw)


def test_spring_compensator_gradient_matches_finite_difference():
    cfg = spring.SpringConfig(lam=1.7)
    parm = spring.parametrization(cfg)
    x = np.array([0.3, -0.8])
    h = 1e-6
    fd = np.array([(parm.Psi_at(x + h * e, 0.0) - parm.Psi_at(x - h * e, 0.0)) / (2 * h) for e in np.eye(2)]).T
    np.testing.assert_allclose(parm.Psi_jac(x, 0.0), fd, atol=1e-7)


def test_spring_psi_is_linear_combination():
    g = spring.goal(spring.SpringConfig(lam=2.0))
    assert g.value(np.array([1.0, 3.0]), 0.0) == 7.0


@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-1.5, 1.5))
def test_spring_parametrization_matches_plant(x1, x2, th):
    cfg = spring.SpringConfig(lam=1.3)
    parm, pl = spring.parametrization(cfg), spring.plant(cfg)
    x = np.array([x1, x2])
    expected = x2 + cfg.lam * float(pl.f2(x, [th])[0])
    assert parm.f(x, [th], 0.0) == pytest.approx(expected, abs=1e-12)


def test_omega_m_examples():
    om = sine.OmegaM()
    assert om.alpha(0.5) == 0.5 and om.contains(0.5)
    assert not om.contains(2.0) and om.alpha(2.0) == 0.0
    assert om.alpha(3.0) == -3.0
    assert om.alpha(-3.0) == 3.0
    assert om.dalpha(-3.0) == -1.0 and om.dalpha(2.0) == 0.0


@pytest.mark.parametrize(
    "kw",
    [
        dict(intervals=((-1.0, 1.0),), signs=(1.0, -1.0)),
        dict(intervals=((-1.0, 1.0), (0.5, 2.0)), signs=(1.0, 1.0)),
        dict(intervals=((-2.0, 1.0),), signs=(1.0,)),
    ],
)
def test_omega_m_validation(kw):
    with pytest.raises(ValueError):
        sine.OmegaM(**kw)


def test_certified_bands_keep_cosine_sign():
    om = sine.certified_omega_m(0.6, 1.4)
    assert om.intervals[1][1] == pytest.approx(math.pi / 2.8)
    thetas = np.linspace(0.6, 1.4, 41)
    for (a, b), s in zip(om.intervals, om.signs):
        xs = np.linspace(a, b, 101)[1:-1]
        c = np.cos(np.outer(thetas, xs))
        assert np.all(s * c > 0)


def test_published_middle_band_edge_fails_strict_check():
    # cos(1.4 * 1.14) < 0, so the printed edge is slightly outside the certified band
    assert math.cos(1.4 * 1.14) < 0
    cfg = sine.SineConfig()
    parm = sine.parametrization(cfg)
    x_grid = np.array([(v, 0.0) for v in np.linspace(1.125, 1.14, 6)])
    rep = check_monotonicity(parm, x_grid, all_pairs(np.linspace(1.38, 1.4, 5)))
    assert rep.n_violations > 0


def test_sine_growth_constants():
    D, D1 = sine.growth_constants(sine.SineConfig(lam=2.0, x1_reach=1.0, theta_hi=1.4))
    assert D == 2.0 and D1 == pytest.approx(2.0 * math.cos(1.4))
    with pytest.raises(ValueError):
        sine.growth_constants(sine.SineConfig(x1_reach=1.2, theta_hi=1.4))


@given(st.floats(-1.1, 1.1), st.floats(0.6, 1.4), st.floats(0.6, 1.4))
def test_sine_growth_bounds_hold_on_reach(x1, th, th_hat):
    cfg = sine.SineConfig()
    D, D1 = sine.growth_constants(cfg)
    x1 = float(np.clip(x1, -cfg.x1_reach, cfg.x1_reach))
    parm = sine.parametrization(cfg)
    x = np.array([x1, 0.0])
    df = parm.f(x, [th], 0.0) - parm.f(x, [th_hat], 0.0)
    a = x1 * (th - th_hat)
    assert df * a >= D1 * a * a - 1e-12
    assert abs(df) <= D * abs(a) + 1e-12


def test_sine_run_stays_inside_bands():
    tr = sine.run(sine.SineConfig(), tf=5.0)
    assert tr.status == "completed"
    assert tr.channel("adapt_active").min() == 1.0


def test_sine_integral_state_frozen_outside_bands():
    # a large reference drives x1 through the gap between bands
    tr = sine.run(sine.SineConfig(amp=2.0), tf=8.0)
    act = tr.channel("adapt_active")[:, 0] > 0.5
    assert 0.0 < act.mean() < 1.0
    th = tr.channel("theta_hat")[:, 0]
    off = ~act[1:] & ~act[:-1]
    assert np.all(np.abs(np.diff(th)[off]) < 1e-12)


def test_sine_estimate_approaches_truth():
    tr = sine.run(sine.SineConfig(), tf=40.0)
    err = np.abs(tr.channel("theta_hat")[:, 0] - 1.0)
    assert err[-1] < 0.1 * err[0]


def test_sine_monotone_error_inside_bands_with_moderate_excursion():
    tr = sine.run(sine.SineConfig(amp=1.5, theta_hat0=0.8), tf=20.0)
    g = gamma_error(tr)
    act = tr.channel("adapt_active")[:, 0] > 0.5
    both = act[1:] & act[:-1]
    assert np.diff(g)[both].max() <= 1e-6


def test_linear_regressor_is_sin_cos():
    tr = linear.run(linear.LinearConfig(), tf=3.0)
    t = tr.times
    np.testing.assert_allclose(tr.channel("alpha"), np.column_stack([np.sin(t), np.cos(t)]), atol=1e-9)


def test_linear_estimate_converges():
    tr = linear.run(linear.LinearConfig(), tf=100.0)
    np.testing.assert_allclose(tr.channel("theta_hat")[-1], [1.0, -1.0], atol=1e-3)


def test_registry():
    assert set(REGISTRY) == {"spring", "sine", "linear", "abs"}
    assert get("abs").wheel and not get("spring").wheel
    with pytest.raises(KeyError):
        get("pendulum")


@pytest.mark.parametrize("name", sorted(REGISTRY))
def test_default_preflights_pass(name):
    sc = get(name)
    checks = sc.preflight(sc.config_cls())
    assert [c.name for c in checks] == ["domain", "monotonicity", "realizability", "poincare"]
    assert all(c.passed for c in checks), checks


def test_preflight_catches_wrong_sign_band():
    sc = get("sine")
    cfg = sine.SineConfig(theta_lo=0.6, theta_hi=1.4)
    bands = sine.certified_omega_m(cfg.theta_lo, cfg.theta_hi)
    flipped = sine.OmegaM(bands.intervals, (1.0, 1.0, 1.0))
    parm = sine.parametrization(cfg, flipped)
    x_grid = np.array([(v, 0.0) for v in np.linspace(2.7, 3.3, 5)])
    rep = check_monotonicity(parm, x_grid, all_pairs(np.linspace(0.6, 1.4, 5)))
    assert not rep.ok
    assert sc.name == "sine"


@given(st.floats(0.2, 5.0), st.floats(-2.0, 2.0), st.floats(-1.5, 1.5), st.floats(-1.0, 1.0))
def test_spring_state_bound_holds(lam, x10, theta, x20):
    cfg = spring.SpringConfig(lam=lam, x1_0=x10, x2_0=x20, theta=theta)
    tr = spring.run(cfg, h=1e-2, tf=4.0)
    lhs = np.abs(tr.x).sum(axis=1).max()
    assert lhs <= spring.state_bound(lam, x10, np.abs(tr.channel("psi")).max()) + 1e-12

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nlpadapt.core import (
    ClosedLoop,
    Disturbance,
    EstimatorState,
    ExpDecay,
    GoalFunction,
    Parametrization,
    Plant,
    control_input,
    estimator_rhs,
    gamma_norm_sq,
    linear_target,
    lyapunov_value,
    mismatch_l2_bound,
    parametric_norm_bound,
    r_correction,
    sign,
    theta_hat,
    virtual_equivalence_check,
)
from nlpadapt.errors import SingularControl, TraceTooShort
from nlpadapt.integrate import Trace
from nlpadapt.scenarios import linear, sine, spring


def test_sign_convention():
    assert sign(0.0) == 0.0 and sign(-2.0) == -1.0 and sign(3.0) == 1.0


def test_control_input_spring_example():
    cfg = spring.SpringConfig(lam=1.0, k0=-1.0)
    u = control_input(spring.plant(cfg), spring.goal(cfg), linear_target(1.0), [0.0], np.array([1.0, 0.0]), 0.0)
    assert u == 0.0


def test_control_input_singular():
    p = Plant(
        f1=lambda x: np.zeros(1),
        f2=lambda x, th: np.zeros(1),
        g1=lambda x: np.zeros(1),
        g2=lambda x: np.ones(1),
        theta_true=[0.0],
        theta_domain=([-1.0], [1.0]),
        q=1,
    )
    g = GoalFunction(lambda x, t: x[0])
    with pytest.raises(SingularControl):
        control_input(p, g, linear_target(), [0.0], np.array([0.3, 0.1]), 0.0)


def test_plant_validation():
    with pytest.raises(ValueError):
        Plant(lambda x: 0, lambda x, th: 0, lambda x: 0, lambda x: 1, [3.0], ([-1.0], [1.0]), 0)


def test_goal_numerical_fallbacks():
    g = GoalFunction(lambda x, t: x[0] ** 2 + t * x[1])
    x = np.array([1.5, -2.0])
    np.testing.assert_allclose(g.gradient(x, 0.5), [3.0, 0.5], atol=1e-6)
    assert g.partial_t(x, 0.5) == pytest.approx(-2.0, abs=1e-6)
    g2 = GoalFunction(lambda x, t: x[0] ** 2, grad_x=lambda x, t: np.array([2 * x[0], 0.0]))
    assert g2.gradient_discrepancy(x, 0.0) < 1e-8


def _est(theta_I, gamma):
    return EstimatorState(np.asarray(theta_I, dtype=float), np.asarray(gamma, dtype=float))


def test_theta_hat_examples():
    parm = Parametrization(f=lambda x, th, t: 0.0, alpha=lambda x, t: np.array([1.0, 3.0]))
    goal = GoalFunction(lambda x, t: 2.0)
    th = theta_hat(goal, parm, _est([1.0, -1.0], np.eye(2)), np.zeros(1), 0.0)
    np.testing.assert_allclose(th, [3.0, 5.0])
    zero = GoalFunction(lambda x, t: 0.0)
    assert np.all(theta_hat(zero, parm, _est([0.0, 0.0], np.eye(2)), np.zeros(1), 0.0) == 0.0)


def test_theta_hat_slip_estimator_form():
    gamma = 100.0
    parm = Parametrization(f=lambda x, th, t: 0.0, alpha=lambda x, t: np.ones(1))
    goal = GoalFunction(lambda x, t: x[0] - x[1])
    x = np.array([0.12, 0.10])
    th = theta_hat(goal, parm, _est([0.004], [[gamma]]), x, 0.0)
    assert th[0] == pytest.approx(gamma * ((0.12 - 0.10) + 0.004))


def test_estimator_state_validation():
    with pytest.raises(ValueError):
        _est([0.0, 0.0], [[1.0, 0.5], [0.0, 1.0]])
    with pytest.raises(np.linalg.LinAlgError):
        _est([0.0], [[-1.0]])
    with pytest.raises(ValueError):
        _est([0.0], np.eye(2))


def test_r_correction_vanishes_for_constant_alpha():
    cfg = spring.SpringConfig()
    parm = Parametrization(f=lambda x, th, t: 0.0, alpha=lambda x, t: np.ones(1), q=1)
    r = r_correction(spring.plant(cfg), spring.goal(cfg), parm, [0.2], 0.7, np.array([0.3, -0.4]), 0.0)
    assert np.all(r == 0.0)


def test_r_correction_sine_example():
    cfg = sine.SineConfig()
    goal = sine.goal(cfg)
    x = np.array([0.5, 0.2])
    psi = goal.value(x, 0.0)
    r = r_correction(sine.plant(cfg), goal, sine.parametrization(cfg), [1.0], 0.3, x, 0.0)
    assert r[0] == pytest.approx(-psi * 0.2, abs=1e-12)


def test_estimator_rhs_examples():
    parm = Parametrization(f=lambda x, th, t: 0.0, alpha=lambda x, t: np.ones(1))
    cfg = spring.SpringConfig()
    est = _est([0.0], [[1.0]])
    g = GoalFunction(lambda x, t: 0.3)
    out = estimator_rhs(g, linear_target(), parm, spring.plant(cfg), est, np.array([0.0, 0.0]), 0.0, 0.0)
    assert out[0] == pytest.approx(0.3)
    g0 = GoalFunction(lambda x, t: 0.0)
    out = estimator_rhs(g0, linear_target(), parm, spring.plant(cfg), est, np.array([0.0, 0.0]), 0.0, 0.0)
    assert out[0] == 0.0


def test_lyapunov_examples():
    assert lyapunov_value([1.0, 2.0], [1.0, 2.0], np.eye(2), 0.0, 1.0, 1.0) == 0.0
    assert lyapunov_value([3.0, 4.0], [0.0, 0.0], np.eye(2), 0.0, 1.0, 1.0) == pytest.approx(12.5)
    assert lyapunov_value([2.0, 0.0], [0.0, 0.0], 2 * np.eye(2), 0.0, 1.0, 1.0) == pytest.approx(1.0)
    # tail term D/(4 D1^2) * tail^2
    assert lyapunov_value([0.0], [0.0], [[1.0]], 2.0, 3.0, 1.5) == pytest.approx(3.0 / 9.0 * 4.0)


def test_mismatch_bound_examples():
    assert mismatch_l2_bound([1.0, 1.0], [1.0, 1.0], np.eye(2), 2.0, 0.0, 1.0) == 0.0
    assert mismatch_l2_bound([0.0, 0.0], [1.0, 0.0], np.eye(2), 2.0, 0.0, 1.0) == pytest.approx(1.0)
    assert mismatch_l2_bound([0.0], [0.0], [[1.0]], 2.0, 0.5, 1.0) == pytest.approx(1.0)
    assert parametric_norm_bound([0.0], [1.0], [[2.0]], 2.0, 1.0, 1.0) == pytest.approx(0.5 + 1.0)


@given(st.floats(0.1, 10), st.floats(-3, 3), st.floats(-3, 3))
def test_gamma_norm_matches_inverse(g, a, b):
    G = np.array([[g, 0.2], [0.2, 1.0]])
    e = np.array([a, b])
    assert gamma_norm_sq(e, G)[0] == pytest.approx(e @ np.linalg.inv(G) @ e, rel=1e-9, abs=1e-12)


def test_exp_decay_tail_matches_quadrature():
    d = ExpDecay(0.1, 1.0)
    generic = Disturbance(lambda t: 0.1 * math.exp(-t))
    for t in (0.0, 0.5, 3.0):
        assert d.l2_tail(t) == pytest.approx(generic.l2_tail(t), rel=1e-8)
    assert d.l2_tail(0.0, 2.0) == pytest.approx(generic.l2(0.0, 2.0), rel=1e-8)
    assert ExpDecay().l2_tail(0.0) == 0.0


def test_parametrization_growth_invariant():
    with pytest.raises(ValueError):
        Parametrization(f=lambda x, th, t: 0, alpha=lambda x, t: 1, D=1.0, D1=2.0)
    with pytest.raises(ValueError):
        Parametrization(f=lambda x, th, t: 0, alpha=lambda x, t: 1, D=1.0, D1=0.0)


def test_closed_loop_matches_composed_operations():
    cfg = sine.SineConfig()
    loop = sine.build(cfg)
    x = np.array([0.4, -0.3])
    loop._n = 2
    theta_I = np.array([0.25])
    y = np.concatenate([x, theta_I])
    est = EstimatorState(theta_I, loop.Gamma)
    th = theta_hat(loop.goal, loop.parm, est, x, 0.7)
    u = control_input(loop.plant, loop.goal, loop.target, th, x, 0.7)
    dI = estimator_rhs(loop.goal, loop.target, loop.parm, loop.plant, est, x, u, 0.7)
    rhs = loop.rhs(0.7, y)
    np.testing.assert_allclose(rhs[2:], dI, atol=1e-12)
    obs = loop.observe(0.7, y)
    assert obs["u"] == pytest.approx(u, abs=1e-12)
    np.testing.assert_allclose(obs["theta_hat"], th, atol=1e-12)


def test_initial_estimate_is_honoured():
    cfg = spring.SpringConfig(theta_hat0=0.7, x1_0=0.8, x2_0=0.4)
    tr = spring.run(cfg, tf=0.01)
    assert tr.channel("theta_hat")[0, 0] == pytest.approx(0.7, abs=1e-12)


def test_certainty_equivalence_cancellation():
    cfg = spring.SpringConfig(theta=0.5, theta_hat0=0.5, x1_0=1.0, x2_0=0.5)
    tr = spring.run(cfg, h=1e-3, tf=3.0)
    psi = tr.channel("psi")[:, 0]
    np.testing.assert_allclose(psi, psi[0] * np.exp(-tr.times), atol=1e-9)
    np.testing.assert_allclose(tr.channel("theta_hat")[:, 0], 0.5, atol=1e-12)


def test_gamma_factorization_invariance():
    rng = np.random.default_rng(3)
    A = rng.normal(size=(2, 2))
    G = A @ A.T + np.eye(2)
    L = np.linalg.cholesky(G)
    w, V = np.linalg.eigh(G)
    S = V @ np.diag(np.sqrt(w)) @ V.T
    cfg = linear.LinearConfig()
    runs = []
    for root in (L, S):
        loop = ClosedLoop(
            linear.plant(cfg), linear.build(cfg).goal, linear_target(), linear.parametrization(cfg), root @ root.T
        )
        runs.append(loop.run([0.0, 1.0, 0.0], [0.0, 0.0], tf=5.0, h=1e-2))
    np.testing.assert_allclose(runs[0].channel("theta_hat"), runs[1].channel("theta_hat"), atol=1e-9)


def test_equivalence_constant_estimate_trace():
    t = np.linspace(0, 1, 11)
    tr = Trace(
        t,
        np.zeros((11, 1)),
        {"theta_hat": np.full(11, 0.4), "psi": np.zeros(11), "phi": np.zeros(11), "alpha": np.ones(11)},
        meta={"Gamma": np.eye(1)},
    )
    assert virtual_equivalence_check(tr).residual == 0.0
    with pytest.raises(TraceTooShort):
        virtual_equivalence_check(
            Trace(t[:2], np.zeros((2, 1)), {k: v[:2] for k, v in tr.channels.items()}, meta=tr.meta)
        )


@given(
    st.floats(0.5, 2.0),
    st.floats(-1.5, 1.5),
    st.floats(-1.0, 1.0),
    st.floats(-1.5, 1.5),
    st.floats(0.3, 3.0),
)
def test_monotone_parameter_error_spring(lam, theta, theta_hat0, x1_0, gamma):
    cfg = spring.SpringConfig(lam=lam, theta=theta, theta_hat0=theta_hat0, x1_0=x1_0, gamma=gamma)
    h = 1e-2
    tr = spring.run(cfg, h=h, tf=4.0)
    err = tr.channel("theta_hat") - tr.channel("theta_true")
    n = gamma_norm_sq(err, tr.meta["Gamma"])
    assert np.max(np.diff(n)) <= 1e-6


@given(st.floats(0.0, 0.3), st.floats(0.6, 1.4))
def test_p1_bound_spring_with_disturbance(amp, theta):
    cfg = spring.SpringConfig(theta=theta, theta_hi=2.0, eps_amp=amp, x1_0=1.0)
    tr = spring.run(cfg, h=1e-2, tf=6.0)
    from nlpadapt.integrate import running_l2

    m = running_l2(tr.times, tr.channel("mismatch"))
    e = running_l2(tr.times, tr.channel("eps"))
    th0 = tr.channel("theta_hat")[0]
    bound = np.array([mismatch_l2_bound(th0, [theta], tr.meta["Gamma"], tr.meta["D"], v, tr.meta["D1"]) for v in e])
    assert np.all(m <= bound)
    par = parametric_norm_bound(th0, [theta], tr.meta["Gamma"], tr.meta["D"], e[-1], tr.meta["D1"])
    err = tr.channel("theta_hat") - tr.channel("theta_true")
    assert np.max(gamma_norm_sq(err, tr.meta["Gamma"])) <= par + 1e-9

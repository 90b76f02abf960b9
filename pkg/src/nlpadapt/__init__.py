"""Adaptive control and parameter estimation for nonlinearly parametrized systems."""
from .core import (
    ClosedLoop,
    Disturbance,
    EstimatorState,
    ExpDecay,
    GoalFunction,
    Parametrization,
    Plant,
    TargetDynamics,
    control_input,
    estimator_rhs,
    linear_target,
    lyapunov_value,
    mismatch_l2_bound,
    parametric_norm_bound,
    r_correction,
    theta_hat,
    virtual_equivalence_check,
)
from .errors import NlpAdaptError
from .excitation import (
    convergence_rate,
    gram_window,
    nonlinear_pe_probe,
    pe_verdict,
    sliding_lambda_min,
)
from .integrate import StopCondition, SystemState, Trace, rk4_step, signal_norm, simulate
from .verify import (
    check_monotonicity,
    empirical_gain,
    estimate_growth_bounds,
    poincare_check,
    psi_by_quadrature,
    realizability_residual,
)

__version__ = "0.1.0"

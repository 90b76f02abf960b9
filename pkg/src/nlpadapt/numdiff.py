"""Central finite differences used when analytic derivatives are absent."""
import numpy as np

REL_STEP = 1e-6


def _step(v):
    return REL_STEP * max(1.0, abs(v))


def jacobian(fun, x, *args):
    """Central-difference Jacobian of ``fun(x, *args)`` w.r.t. the vector x.

    Returns an array of shape ``out_shape + (len(x),)``.
    """
    x = np.asarray(x, dtype=float)
    f0 = np.asarray(fun(x, *args), dtype=float)
    jac = np.empty(f0.shape + (x.size,))
    for i in range(x.size):
        hi = _step(x[i])
        xp = x.copy()
        xm = x.copy()
        xp[i] += hi
        xm[i] -= hi
        jac[..., i] = (np.asarray(fun(xp, *args), dtype=float) - np.asarray(fun(xm, *args), dtype=float)) / (2 * hi)
    return jac


def time_derivative(fun, x, t):
    """Central difference of ``fun(x, t)`` with respect to t."""
    ht = _step(t)
    return (np.asarray(fun(x, t + ht), dtype=float) - np.asarray(fun(x, t - ht), dtype=float)) / (2 * ht)


def centered(values, times):
    """Centered first difference at interior samples (uniform or not)."""
    v = np.asarray(values, dtype=float)
    t = np.asarray(times, dtype=float)
    dt = (t[2:] - t[:-2])
    if v.ndim == 1:
        return (v[2:] - v[:-2]) / dt
    return (v[2:] - v[:-2]) / dt[:, None]

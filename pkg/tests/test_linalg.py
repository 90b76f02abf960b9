import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from nlpadapt.linalg import jacobi_eigvals, lambda_max, lambda_min


@given(st.integers(1, 16).flatmap(lambda n: arrays(float, (n, n), elements=st.floats(-10, 10))))
def test_jacobi_matches_eigvalsh(a):
    s = 0.5 * (a + a.T)
    ref = np.linalg.eigvalsh(s)
    got = jacobi_eigvals(s)
    assert np.allclose(got, ref, atol=1e-10 * max(1.0, np.abs(ref).max()))


def test_known_spectrum():
    assert np.allclose(jacobi_eigvals([[2.0, 1.0], [1.0, 2.0]]), [1.0, 3.0])
    assert lambda_min(np.pi * np.eye(3)) == pytest.approx(np.pi)
    assert lambda_max(np.diag([1.0, 5.0, 2.0])) == 5.0


def test_rejects_bad_shapes():
    with pytest.raises(ValueError):
        jacobi_eigvals(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        jacobi_eigvals(np.eye(17))

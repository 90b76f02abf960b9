"""Cyclic Jacobi eigenvalues for small symmetric matrices."""
import numpy as np

MAX_DIM = 16


def jacobi_eigvals(a, tol=1e-14, max_sweeps=64) -> np.ndarray:
    """Eigenvalues of a symmetric matrix in ascending order.

    Classical cyclic-by-row Jacobi rotations; converges quadratically once
    the off-diagonal mass is small. Intended for dimensions up to 16.
    """
    a = np.array(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    n = a.shape[0]
    if n > MAX_DIM:
        raise ValueError(f"dimension {n} exceeds {MAX_DIM}")
    a = 0.5 * (a + a.T)
    scale = max(np.max(np.abs(a)), 1e-300) if n else 1.0
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if theta == 0:
                    t = 1.0
                elif abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
                a[p, q] = a[q, p] = 0.0
    return np.sort(np.diag(a))


def lambda_min(a) -> float:
    return float(jacobi_eigvals(a)[0])


def lambda_max(a) -> float:
    return float(jacobi_eigvals(a)[-1])

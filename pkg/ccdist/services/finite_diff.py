"""
Finite-difference oracles for gradients and Hessians.
"""

from typing import Callable

import numpy as np

from ccdist.config import settings

ScalarFunction = Callable[[np.ndarray], float]


def central_gradient(f: ScalarFunction, x, step: float = None) -> np.ndarray:
    """Second-order central differences, step scaled by max(1, |x_k|)."""
    h0 = settings.fd_step if step is None else step
    x = np.asarray(x, dtype=float)
    grad = np.empty_like(x)
    for k in range(x.size):
        h = h0 * max(1.0, abs(x[k]))
        e = np.zeros_like(x)
        e[k] = h
        grad[k] = (f(x + e) - f(x - e)) / (2.0 * h)
    return grad


def richardson_gradient(f: ScalarFunction, x, step: float = None) -> np.ndarray:
    h = settings.fd_step if step is None else step
    coarse = central_gradient(f, x, h)
    fine = central_gradient(f, x, h / 2.0)
    return (4.0 * fine - coarse) / 3.0


def central_hessian(f: ScalarFunction, x, step: float = None) -> np.ndarray:
    """Symmetric second differences of a scalar function."""
    h = settings.fd_step_second if step is None else step
    x = np.asarray(x, dtype=float)
    n = x.size
    hess = np.empty((n, n))
    f0 = f(x)
    eye = np.eye(n) * h
    for a in range(n):
        hess[a, a] = (f(x + eye[a]) - 2.0 * f0 + f(x - eye[a])) / h**2
        for b in range(a + 1, n):
            value = (
                f(x + eye[a] + eye[b])
                - f(x + eye[a] - eye[b])
                - f(x - eye[a] + eye[b])
                + f(x - eye[a] - eye[b])
            ) / (4.0 * h**2)
            hess[a, b] = hess[b, a] = value
    return hess

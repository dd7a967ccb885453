"""
Damped Newton / Gauss-Newton driver shared by the distance-space and
position-space solvers.

Each residual row is divided by a caller-supplied magnitude before the
norm is taken, so tolerances are relative. Square systems are solved with
an LU factorization; over-determined ones with least squares.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.linalg as LA

from ccdist.config import settings
from ccdist.errors import NonConvergenceError, SingularSystemError

logger = logging.getLogger(__name__)

VectorFunction = Callable[[np.ndarray], np.ndarray]
MatrixFunction = Callable[[np.ndarray], np.ndarray]

# Armijo constant for the sufficient-decrease test
ARMIJO = 1e-4


@dataclass
class NewtonResult:
    z: np.ndarray
    residual_norm: float
    iterations: int


def scaled_norm(residual: np.ndarray, scales: np.ndarray) -> float:
    return float(np.max(np.abs(residual) / scales))


def damped_newton(
    residual: VectorFunction,
    jacobian: MatrixFunction,
    z0: np.ndarray,
    scales: VectorFunction,
    admissible: Optional[Callable[[np.ndarray], bool]] = None,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
    halvings: Optional[int] = None,
) -> NewtonResult:
    """
    Solve residual(z) = 0 by damped Newton with backtracking.

    Args:
        residual: z -> F(z)
        jacobian: z -> dF/dz (square or tall)
        z0: initial iterate
        scales: z -> positive magnitude of each residual row
        admissible: rejects trial points outside the domain
        tol: convergence threshold on max |F_k| / scale_k
        max_iter: Newton iteration cap
        halvings: backtracking cap per iteration

    Returns:
        NewtonResult with the converged iterate
    """
    tol = settings.newton_tol if tol is None else tol
    max_iter = settings.newton_max_iter if max_iter is None else max_iter
    halvings = settings.backtrack_halvings if halvings is None else halvings
    admissible = admissible or (lambda z: True)

    z = np.asarray(z0, dtype=float).copy()
    if not admissible(z):
        raise NonConvergenceError("initial iterate is outside the admissible domain")

    F = residual(z)
    s = scales(z)
    norm = scaled_norm(F, s)

    for iteration in range(max_iter + 1):
        if not np.isfinite(norm):
            raise NonConvergenceError(
                "residual is not finite", iterations=iteration, residual_norm=norm
            )
        if norm < tol:
            return NewtonResult(z=z, residual_norm=norm, iterations=iteration)
        if iteration == max_iter:
            break

        J = jacobian(z) / s[:, None]
        rhs = -F / s
        step = _newton_step(J, rhs, iteration, norm)

        alpha = 1.0
        accepted = False
        for _ in range(halvings + 1):
            trial = z + alpha * step
            if admissible(trial):
                F_trial = residual(trial)
                s_trial = scales(trial)
                norm_trial = scaled_norm(F_trial, s_trial)
                if np.isfinite(norm_trial) and (
                    norm_trial <= (1.0 - ARMIJO * alpha) * norm or norm_trial < tol
                ):
                    accepted = True
                    break
            alpha *= 0.5

        if not accepted:
            raise NonConvergenceError(
                "line search failed to reduce the residual",
                iterations=iteration,
                residual_norm=norm,
            )

        logger.debug("newton iter=%d alpha=%.3g residual=%.3e", iteration + 1, alpha, norm_trial)
        z, F, s, norm = trial, F_trial, s_trial, norm_trial

    raise NonConvergenceError(
        f"no convergence within {max_iter} iterations",
        iterations=max_iter,
        residual_norm=norm,
    )


def _newton_step(J: np.ndarray, rhs: np.ndarray, iteration: int, norm: float) -> np.ndarray:
    if not np.all(np.isfinite(J)):
        raise SingularSystemError(
            "Jacobian has non-finite entries", iterations=iteration, residual_norm=norm
        )

    if J.shape[0] == J.shape[1]:
        cond = np.linalg.cond(J)
        if not np.isfinite(cond) or cond > settings.singular_cond:
            raise SingularSystemError(
                f"Jacobian is numerically singular (cond={cond:.3e})",
                iterations=iteration,
                residual_norm=norm,
            )
        try:
            return LA.solve(J, rhs)
        except LA.LinAlgError as e:
            raise SingularSystemError(str(e), iterations=iteration, residual_norm=norm) from e

    step, _, rank, _ = LA.lstsq(J, rhs)
    if rank < J.shape[1]:
        raise SingularSystemError(
            f"Jacobian rank {rank} < {J.shape[1]}", iterations=iteration, residual_norm=norm
        )
    return step

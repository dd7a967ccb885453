"""
Collinear central configurations (Moulton orderings)

Bodies sit on a line in the order given by a permutation; unknowns are the
n-1 positive gaps and delta. All per-pair arrays in this module are in
positional order: pair (a, b) means the bodies at positions a < b.
"""

import logging
import math
import time
from itertools import combinations, permutations
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as LA
from scipy.optimize import minimize
from scipy.spatial.distance import pdist

from ccdist.config import settings
from ccdist.errors import (
    ClassificationError,
    EnumerationIncompleteError,
    InternalError,
    InvalidOrderingError,
    PreconditionError,
    SolverError,
)
from ccdist.models import (
    CollinearSolution,
    DistanceVector,
    GammaReport,
    LBasisReport,
    Ordering,
    PsiReport,
)
from ccdist.services.constraints import l_gradient
from ccdist.services.distgeo import pair_count, pair_index, pairs
from ccdist.services.energetics import (
    MassLike,
    as_masses,
    inertia,
    inertia_target,
    pair_products,
    potential,
    r_vector,
    s_vector,
)
from ccdist.services.log_service import LogLevel, LogType, log_service
from ccdist.services.newton import damped_newton

logger = logging.getLogger(__name__)


def _as_ordering(ordering) -> Ordering:
    if isinstance(ordering, Ordering):
        return ordering
    return Ordering(perm=tuple(ordering))


def positional_masses(m: MassLike, ordering: Ordering) -> np.ndarray:
    masses = as_masses(m)
    if masses.size != ordering.n:
        raise PreconditionError(f"{masses.size} masses for an ordering of {ordering.n} bodies")
    return masses[np.asarray(ordering.perm) - 1]


def gap_distances(gaps: Sequence[float]) -> np.ndarray:
    """Packed positional distances of points separated by ``gaps``."""
    x = np.concatenate([[0.0], np.cumsum(np.asarray(gaps, dtype=float))])
    return pdist(x[:, None])


def path_matrix(n: int) -> np.ndarray:
    """P[pair, k] = 1 when gap k lies between the pair's positions."""
    P = np.zeros((pair_count(n), n - 1))
    for slot, (a, b) in enumerate(pairs(n)):
        P[slot, a - 1 : b - 1] = 1.0
    return P


def balance_matrix(n: int) -> np.ndarray:
    """B[p, pair] = +1 when p is the right body of the pair, -1 when left."""
    B = np.zeros((n, pair_count(n)))
    for slot, (a, b) in enumerate(pairs(n)):
        B[b - 1, slot] = 1.0
        B[a - 1, slot] = -1.0
    return B


def residuals_collinear(
    gaps: Sequence[float], delta: float, m: MassLike, ordering
) -> Tuple[np.ndarray, float]:
    """
    Residual of position p: sum_{a<p} S_ap - sum_{b>p} S_pb, plus I - I0.

    Returns:
        (n residuals in positional order, normalization defect)
    """
    ordering = _as_ordering(ordering)
    masses = positional_masses(m, ordering)
    arr = gap_distances(gaps)
    S = s_vector(arr, masses, delta)
    return balance_matrix(ordering.n) @ S, inertia(arr, masses) - inertia_target(masses)


def hessian_collinear(r: Sequence[float], delta: float, m: MassLike) -> np.ndarray:
    """diag(R_ij); the linear collinearity constraints add no curvature."""
    return np.diag(r_vector(np.asarray(r, dtype=float), m, delta))


def _scale_gaps(gaps: np.ndarray, masses: np.ndarray) -> np.ndarray:
    return gaps * math.sqrt(inertia_target(masses) / inertia(gap_distances(gaps), masses))


def _fit_delta(gaps: np.ndarray, masses: np.ndarray) -> float:
    """Least-squares delta for fixed gaps."""
    n = masses.size
    arr = gap_distances(gaps)
    w = pair_products(masses)
    B = balance_matrix(n)
    a = B @ (w * arr)
    c = B @ (w * arr**-2)
    return float(a @ c / (a @ a))


def _minimize_shape(gaps: np.ndarray, masses: np.ndarray) -> np.ndarray:
    """Minimize the scale-invariant U * sqrt(I) over log-gaps."""
    def objective(log_gaps: np.ndarray) -> float:
        arr = gap_distances(np.exp(log_gaps))
        return potential(arr, masses) * math.sqrt(inertia(arr, masses))

    result = minimize(objective, np.log(gaps), method="BFGS", options={"gtol": 1e-12})
    return np.exp(result.x)


def _newton_gaps(gaps0: np.ndarray, masses: np.ndarray, tol, max_iter):
    n = masses.size
    B = balance_matrix(n)
    P = path_matrix(n)
    w = pair_products(masses)
    total = masses.sum()
    target = inertia_target(masses)
    B_abs = np.abs(B)

    def residual(z: np.ndarray) -> np.ndarray:
        arr = gap_distances(z[:-1])
        body = B @ s_vector(arr, masses, z[-1])
        return np.concatenate([body[:-1], [inertia(arr, masses) - target]])

    def jacobian(z: np.ndarray) -> np.ndarray:
        arr = gap_distances(z[:-1])
        R = r_vector(arr, masses, z[-1])
        J = np.zeros((n, n))
        J[:-1, :-1] = (B @ (R[:, None] * P))[:-1]
        J[:-1, -1] = (B @ (w * arr))[:-1]
        J[-1, :-1] = (w * arr / total) @ P
        return J

    def scales(z: np.ndarray) -> np.ndarray:
        arr = gap_distances(z[:-1])
        body = B_abs @ (w * (abs(z[-1]) * arr + arr**-2))
        return np.concatenate([body[:-1], [target]])

    z0 = np.concatenate([gaps0, [_fit_delta(gaps0, masses)]])
    return damped_newton(
        residual,
        jacobian,
        z0,
        scales,
        admissible=lambda z: bool(np.all(z[:-1] > 0)),
        tol=tol,
        max_iter=max_iter,
    )


def solve_ordering(
    m: MassLike,
    ordering,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
    initial_gaps: Optional[Sequence[float]] = None,
) -> CollinearSolution:
    """
    Collinear central configuration for one ordering.

    Newton starts from uniform gaps scaled to I = I0 (or ``initial_gaps``);
    if that fails the shape is first relaxed by minimizing U * sqrt(I).

    Args:
        m: masses by body label
        ordering: body labels from left to right
        tol: relative residual tolerance
        max_iter: Newton iteration cap
        initial_gaps: optional starting gaps

    Returns:
        CollinearSolution with multipliers, spectrum and the label-space distances
    """
    ordering = _as_ordering(ordering)
    n = ordering.n
    if n < 3:
        raise PreconditionError("collinear problem needs at least three bodies")
    masses = positional_masses(m, ordering)

    gaps0 = np.ones(n - 1) if initial_gaps is None else np.asarray(initial_gaps, dtype=float)
    if gaps0.size != n - 1 or np.any(gaps0 <= 0):
        raise PreconditionError(f"initial gaps must be {n - 1} positive numbers")
    gaps0 = _scale_gaps(gaps0, masses)

    start_time = time.perf_counter()
    try:
        result = _newton_gaps(gaps0, masses, tol, max_iter)
    except SolverError as e:
        logger.debug("collinear Newton from uniform gaps failed (%s); relaxing shape", e)
        relaxed = _scale_gaps(_minimize_shape(gaps0, masses), masses)
        try:
            result = _newton_gaps(relaxed, masses, tol, max_iter)
        except SolverError as e:
            log_service.log(
                LogLevel.ERROR,
                LogType.COLLINEAR,
                f"collinear Newton failed for ordering {ordering.perm}: {e}",
                details={"iterations": e.iterations, "residual_norm": e.residual_norm},
            )
            raise

    gaps, delta = result.z[:-1], float(result.z[-1])
    arr = gap_distances(gaps)
    S = s_vector(arr, masses, delta)
    labels = list(pairs(n))
    solution = CollinearSolution(
        ordering=ordering,
        gaps=gaps.tolist(),
        delta=delta,
        sigma={f"{a}{b}": float(-S[k]) for k, (a, b) in enumerate(labels) if a > 1},
        residual_norm=result.residual_norm,
        iterations=result.iterations,
        spectrum=r_vector(arr, masses, delta).tolist(),
        s_signs={f"{a}{b}": int(np.sign(S[k])) for k, (a, b) in enumerate(labels)},
    )

    if np.any(gaps <= 0):
        raise InvalidOrderingError(
            f"ordering {ordering.perm} produced a non-positive gap",
            solution=solution,
            iterations=result.iterations,
            residual_norm=result.residual_norm,
        )

    solution.distances = label_distances(arr, ordering)
    _check_multiplier_bracket(solution, arr, delta)
    log_service.log(
        LogLevel.SUCCESS,
        LogType.COLLINEAR,
        f"collinear configuration for ordering {ordering.perm}",
        details={"iterations": result.iterations, "delta": delta},
        duration_ms=(time.perf_counter() - start_time) * 1000,
    )
    return solution


def label_distances(arr: np.ndarray, ordering: Ordering) -> DistanceVector:
    """Re-pack positional distances by body label."""
    n = ordering.n
    out = np.empty(pair_count(n))
    for slot, (a, b) in enumerate(pairs(n)):
        i, j = sorted((ordering.perm[a - 1], ordering.perm[b - 1]))
        out[pair_index(i, j, n).linear] = arr[slot]
    return DistanceVector(n=n, entries=out.tolist())


def _check_multiplier_bracket(solution: CollinearSolution, arr: np.ndarray, delta: float):
    """r_1n^-3 < delta < r^-3 for r in (r_12, r_23, r_{n-2,n-1}, r_{n-1,n}); positive spectrum."""
    n = solution.ordering.n
    adjacent = [
        arr[pair_index(a, a + 1, n).linear] for a in sorted({1, 2, max(1, n - 2), n - 1})
    ]
    lower = arr[pair_index(1, n, n).linear] ** -3
    upper = max(adjacent) ** -3
    violations = []
    if not lower < delta < upper:
        violations.append("r_1n^-3 < delta < adjacent-gap^-3")
    if min(solution.spectrum) <= 0:
        violations.append("Hessian spectrum positive")
    if violations:
        raise ClassificationError(
            f"collinear solution for {solution.ordering.perm} violates relations", violations
        )


def canonical_orderings(n: int) -> List[Ordering]:
    """n!/2 orderings, one per reflection pair (first label < last label)."""
    return [Ordering(perm=p) for p in permutations(range(1, n + 1)) if p[0] < p[-1]]


def moulton_enumerate(
    m: MassLike, n: Optional[int] = None, tol: Optional[float] = None
) -> List[Tuple[Ordering, CollinearSolution]]:
    """
    Solve every canonical ordering. Any solver failure aborts the
    enumeration; the label-space distance vectors must be pairwise distinct.
    """
    masses = as_masses(m)
    n = masses.size if n is None else n
    if n != masses.size:
        raise PreconditionError(f"n={n} but {masses.size} masses given")
    if n > settings.moulton_max_bodies:
        raise PreconditionError(
            f"n={n} exceeds the enumeration limit of {settings.moulton_max_bodies} bodies"
        )

    start_time = time.perf_counter()
    results = []
    for ordering in canonical_orderings(n):
        try:
            results.append((ordering, solve_ordering(masses, ordering, tol=tol)))
        except SolverError as e:
            raise EnumerationIncompleteError(
                f"ordering {ordering.perm} did not converge: {e}",
                iterations=e.iterations,
                residual_norm=e.residual_norm,
            ) from e

    vectors = np.array([sol.distances.array for _, sol in results])
    threshold = settings.cluster_tol * float(np.max(vectors))
    for a, b in combinations(range(len(vectors)), 2):
        if np.max(np.abs(vectors[a] - vectors[b])) <= threshold:
            raise EnumerationIncompleteError(
                f"orderings {results[a][0].perm} and {results[b][0].perm} gave the same solution"
            )

    log_service.log(
        LogLevel.SUCCESS,
        LogType.COLLINEAR,
        f"enumerated {len(results)} collinear configurations",
        details={"n": n},
        duration_ms=(time.perf_counter() - start_time) * 1000,
    )
    return results


def gamma_matrix(m: MassLike) -> GammaReport:
    """
    Quadratic form of 2m I in the distances r_12..r_1n (masses in positional order):
    Gamma_kk = m_k (m - m_k), Gamma_jk = -m_j m_k.
    """
    masses = as_masses(m)
    if masses.size < 2:
        raise PreconditionError("need at least two masses")
    tail = masses[1:]
    G = -np.outer(tail, tail)
    np.fill_diagonal(G, tail * (masses.sum() - tail))
    return GammaReport(
        masses=masses.tolist(), matrix=G.tolist(), gammas=gamma_recursion(masses).tolist()
    )


def _completion(masses: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Successive completion of squares: pivots and unit lower multipliers."""
    tail = masses[1:]
    A = -np.outer(tail, tail)
    np.fill_diagonal(A, tail * (masses.sum() - tail))
    size = A.shape[0]
    gammas = np.empty(size)
    L = np.eye(size)
    for k in range(size):
        pivot = A[k, k]
        if pivot <= 0:
            raise InternalError(f"non-positive pivot {pivot:.3e} while completing squares")
        gammas[k] = pivot
        L[k + 1 :, k] = A[k + 1 :, k] / pivot
        A[k + 1 :, k + 1 :] -= np.outer(A[k + 1 :, k], A[k, k + 1 :]) / pivot
    return gammas, L


def gamma_recursion(m: MassLike) -> np.ndarray:
    """
    Pivots gamma_2..gamma_n of the completed-square form of 2m I.
    Three bodies: gamma_2 = m2 (m1 + m3), gamma_3 = m1 m2 m3 m / gamma_2.
    """
    masses = as_masses(m)
    if np.any(masses <= 0):
        raise PreconditionError("masses must be positive")
    return _completion(masses)[0]


def completed_square_form(m: MassLike, r1: Sequence[float]) -> float:
    """sum_k gamma_k (r_1k - f_k)^2 with f_k built from r_1j, j > k."""
    gammas, L = _completion(as_masses(m))
    return float(np.sum(gammas * (L.T @ np.asarray(r1, dtype=float)) ** 2))


def psi_transform(m: MassLike) -> PsiReport:
    """Psi^-1 is the upper Cholesky factor of Gamma (Gamma = U^T U), so |p|^2 = 2m I."""
    masses = as_masses(m)
    G = np.asarray(gamma_matrix(masses).matrix)
    psi_inv = LA.cholesky(G, lower=False)
    psi = LA.solve_triangular(psi_inv, np.eye(G.shape[0]), lower=False)
    error = float(np.max(np.abs(psi @ psi_inv - np.eye(G.shape[0]))))
    return PsiReport(psi_inv=psi_inv.tolist(), psi=psi.tolist(), roundtrip_error=error)


def p_coordinates(solution: CollinearSolution, m: MassLike) -> np.ndarray:
    """p = Psi^-1 (r_12, ..., r_1n) with masses in positional order."""
    masses = positional_masses(m, solution.ordering)
    r1 = np.cumsum(solution.gaps)
    return np.asarray(psi_transform(masses).psi_inv) @ r1


def l_basis_check(n: int) -> LBasisReport:
    """
    The gradients of L_{1,l,p} (2 <= l < p <= n) are independent and every
    L_{i,j,k} equals L_{1,i,j} - L_{1,i,k} + L_{1,j,k}.
    """
    if n < 3:
        raise PreconditionError("collinearity constraints need at least three bodies")
    basis = {(l, p): l_gradient(n, (1, l, p)) for l, p in combinations(range(2, n + 1), 2)}
    rank = int(np.linalg.matrix_rank(np.array(list(basis.values()))))
    representation_ok = all(
        np.array_equal(
            l_gradient(n, (i, j, k)), basis[(i, j)] - basis[(i, k)] + basis[(j, k)]
        )
        for i, j, k in combinations(range(2, n + 1), 3)
    )
    return LBasisReport(
        n=n, rank=rank, expected_rank=math.comb(n - 1, 2), representation_ok=representation_ok
    )



"""
Position-space oracle

Independent checks of the distance-space results: a Gauss-Newton solver on
planar coordinates, distance-to-position reconstruction, the Euler quintic,
a randomized identity fuzzer and a brute-force minimum for three bodies.
"""

import logging
import math
import time
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.spatial.distance import pdist, squareform

from ccdist.config import settings
from ccdist.errors import PreconditionError, ReconstructionError, SolverError
from ccdist.models import (
    BruteForceReport,
    CrossValidationReport,
    FuzzFailure,
    FuzzReport,
    OracleSolution,
    Ordering,
    PlanarConfiguration,
)
from ccdist.services.collinear import p_coordinates, psi_transform, solve_ordering
from ccdist.services.constraints import factorization_residuals, heron_factorization
from ccdist.services.distgeo import (
    DistanceLike,
    PositionLike,
    area_identity_residual,
    as_distances,
    as_positions,
    body_count,
    cayley_menger,
    cm_gradient,
    sine_identity_residual,
)
from ccdist.services.energetics import (
    MassLike,
    as_masses,
    inertia_positions,
    inertia_target,
    pair_products,
    potential,
    s_vector,
)
from ccdist.services.finite_diff import richardson_gradient
from ccdist.services.log_service import LogLevel, LogType, log_service
from ccdist.services.newton import damped_newton

logger = logging.getLogger(__name__)

FUZZ_CHECKS = ("chain_rule", "area_identity", "sine_identity", "factorization", "heron")
FUZZ_TOLERANCES = {
    "chain_rule": 1e-6,
    "area_identity": 1e-12,
    "sine_identity": 1e-12,
    "factorization": 1e-10,
    "heron": 1e-12,
}
FUZZ_QUADS = ((1, 2, 3, 4), (1, 2, 3, 5), (1, 2, 4, 5))


def position_residuals(x: PositionLike, m: MassLike, delta: float) -> np.ndarray:
    """F_i = sum_j m_i m_j (x_i - x_j)(delta - r_ij^-3), shape (n, 2)."""
    pts = as_positions(x)
    masses = as_masses(m)
    n = len(pts)
    iu = np.triu_indices(n, k=1)
    diff = pts[iu[0]] - pts[iu[1]]
    r = np.linalg.norm(diff, axis=1)
    forces = (pair_products(masses) * (delta - r**-3))[:, None] * diff
    out = np.zeros_like(pts)
    np.add.at(out, iu[0], forces)
    np.subtract.at(out, iu[1], forces)
    return out


def force_scale(x: PositionLike, m: MassLike, delta: float) -> np.ndarray:
    """Per-body magnitude sum_j m_i m_j (|delta| r_ij + r_ij^-2)."""
    pts = as_positions(x)
    n = len(pts)
    D = squareform(pdist(pts))
    masses = as_masses(m)
    W = np.outer(masses, masses)
    with np.errstate(divide="ignore"):
        terms = W * (abs(delta) * D + np.where(D > 0, D, np.inf) ** -2)
    terms[np.diag_indices(n)] = 0.0
    return terms.sum(axis=1)


def normalize_configuration(
    x: PositionLike, m: MassLike, pinned: Tuple[int, int] = (1, 3)
) -> np.ndarray:
    """Center of mass at the origin, P_a -> P_b along +x, I = I0."""
    pts = as_positions(x).copy()
    masses = as_masses(m)
    pts -= masses @ pts / masses.sum()
    a, b = pinned
    direction = pts[b - 1] - pts[a - 1]
    angle = math.atan2(direction[1], direction[0])
    c, s = math.cos(-angle), math.sin(-angle)
    pts = pts @ np.array([[c, s], [-s, c]])
    return pts * math.sqrt(inertia_target(masses) / inertia_positions(pts, masses))


def _fit_delta(pts: np.ndarray, masses: np.ndarray) -> float:
    """Least-squares delta of F(delta) = delta A - B."""
    A = position_residuals(pts, masses, 1.0) - position_residuals(pts, masses, 0.0)
    B = -position_residuals(pts, masses, 0.0)
    return float(np.sum(A * B) / np.sum(A * A))


class OracleSolver:
    """位置空間求解器"""

    def solve_positions(
        self,
        m: MassLike,
        guess: PositionLike,
        tol: Optional[float] = None,
        max_iter: Optional[int] = None,
        pinned: Tuple[int, int] = (1, 3),
    ) -> OracleSolution:
        """
        Gauss-Newton on (x, delta) with gauge rows: sum m_i x_i = 0,
        (x_b - x_a)_y = 0 for pinned = (a, b), and I(x) = I0.

        Args:
            m: masses
            guess: planar starting positions
            tol: relative residual tolerance
            max_iter: iteration cap
            pinned: bodies whose connecting segment is held horizontal

        Returns:
            OracleSolution with lambda = m delta
        """
        masses = as_masses(m)
        pts0 = as_positions(guess)
        n = len(pts0)
        if masses.size != n:
            raise PreconditionError(f"{masses.size} masses for {n} positions")
        tol = settings.oracle_tol if tol is None else tol
        max_iter = settings.oracle_max_iter if max_iter is None else max_iter
        a, b = pinned
        total = masses.sum()
        target = inertia_target(masses)
        w = pair_products(masses)
        iu = np.triu_indices(n, k=1)

        pts0 = normalize_configuration(pts0, masses, pinned)
        z0 = np.concatenate([pts0.ravel(), [_fit_delta(pts0, masses)]])

        def residual(z: np.ndarray) -> np.ndarray:
            pts, delta = z[:-1].reshape(n, 2), z[-1]
            center = masses @ pts
            return np.concatenate(
                [
                    position_residuals(pts, masses, delta).ravel(),
                    center,
                    [pts[b - 1, 1] - pts[a - 1, 1], inertia_positions(pts, masses) - target],
                ]
            )

        def jacobian(z: np.ndarray) -> np.ndarray:
            pts, delta = z[:-1].reshape(n, 2), z[-1]
            J = np.zeros((2 * n + 4, 2 * n + 1))
            diff = pts[iu[0]] - pts[iu[1]]
            r = np.linalg.norm(diff, axis=1)
            coef = w * (delta - r**-3)
            for k, (i, j) in enumerate(zip(*iu)):
                block = coef[k] * np.eye(2) + 3.0 * w[k] * r[k] ** -5 * np.outer(diff[k], diff[k])
                si, sj = slice(2 * i, 2 * i + 2), slice(2 * j, 2 * j + 2)
                J[si, si] += block
                J[si, sj] -= block
                J[sj, si] -= block
                J[sj, sj] += block
                J[si, -1] += w[k] * diff[k]
                J[sj, -1] -= w[k] * diff[k]
            for i in range(n):
                J[2 * n, 2 * i] = masses[i]
                J[2 * n + 1, 2 * i + 1] = masses[i]
            J[2 * n + 2, 2 * (b - 1) + 1] = 1.0
            J[2 * n + 2, 2 * (a - 1) + 1] -= 1.0
            center = masses @ pts / total
            J[2 * n + 3, :-1] = (masses[:, None] * (pts - center)).ravel()
            return J

        def scales(z: np.ndarray) -> np.ndarray:
            pts, delta = z[:-1].reshape(n, 2), z[-1]
            extent = float(np.max(np.abs(pts))) or 1.0
            body = np.repeat(force_scale(pts, masses, delta), 2)
            return np.concatenate([body, [total * extent] * 2, [extent, target]])

        def admissible(z: np.ndarray) -> bool:
            pts = z[:-1].reshape(n, 2)
            return bool(np.min(pdist(pts)) > 1e-12 * (float(np.max(np.abs(pts))) or 1.0))

        start_time = time.perf_counter()
        try:
            result = damped_newton(
                residual, jacobian, z0, scales, admissible=admissible, tol=tol, max_iter=max_iter
            )
        except SolverError as e:
            log_service.log(
                LogLevel.ERROR,
                LogType.ORACLE,
                f"position-space solve failed: {e}",
                details={"iterations": e.iterations, "residual_norm": e.residual_norm},
            )
            raise

        pts, delta = result.z[:-1].reshape(n, 2), float(result.z[-1])
        log_service.log(
            LogLevel.SUCCESS,
            LogType.ORACLE,
            "position-space central configuration found",
            details={"iterations": result.iterations, "residual_norm": result.residual_norm},
            duration_ms=(time.perf_counter() - start_time) * 1000,
        )
        return OracleSolution(
            x=PlanarConfiguration.from_array(pts),
            lambda_=total * delta,
            delta=delta,
            residual_norm=result.residual_norm,
            iterations=result.iterations,
            pinned=pinned,
        )

    def cross_validate(
        self, r: DistanceLike, m: MassLike, tol: Optional[float] = None
    ) -> CrossValidationReport:
        """Reconstruct positions from r, re-solve in position space and compare distances."""
        tol = settings.cross_validate_tol if tol is None else tol
        arr = as_distances(r)
        oracle = self.solve_positions(m, reconstruct_positions(arr))
        error = float(np.max(np.abs(pdist(oracle.x.array) - arr) / arr))
        report = CrossValidationReport(max_relative_error=error, passed=error < tol, oracle=oracle)
        log_service.log(
            LogLevel.INFO if report.passed else LogLevel.WARNING,
            LogType.ORACLE,
            "cross-validation " + ("passed" if report.passed else "failed"),
            details={"max_relative_error": error},
        )
        return report


def reconstruct_positions(r: DistanceLike, tol: float = 1e-8) -> PlanarConfiguration:
    """
    Trilaterate from P1 at the origin and P3 on the +x axis. The first body
    off the axis goes to y > 0; later ones take the sign that matches the
    bodies already placed. All distances are verified afterwards.
    """
    arr = as_distances(r)
    n = body_count(arr.size)
    if n < 3:
        raise PreconditionError("reconstruction needs at least three bodies")
    D = squareform(arr, checks=False)
    scale = float(np.max(arr))
    base = D[0, 2]
    pts = np.zeros((n, 2))
    pts[2] = (base, 0.0)
    placed = [0, 2]

    for k in [k for k in range(n) if k not in (0, 2)]:
        x = (D[0, k] ** 2 - D[2, k] ** 2 + base**2) / (2.0 * base)
        y2 = D[0, k] ** 2 - x**2
        if y2 < -tol * scale**2:
            raise ReconstructionError(f"body {k + 1} cannot be placed: negative squared height")
        y = math.sqrt(max(y2, 0.0))

        def mismatch(candidate: np.ndarray) -> float:
            return float(
                sum(abs(np.linalg.norm(candidate - pts[p]) - D[p, k]) for p in placed)
            )

        upper, lower = np.array([x, y]), np.array([x, -y])
        pts[k] = upper if mismatch(upper) <= mismatch(lower) + tol * scale else lower
        placed.append(k)

    error = float(np.max(np.abs(pdist(pts) - arr) / arr))
    if error > tol:
        raise ReconstructionError(f"distances are not planar (max relative mismatch {error:.3e})")
    return PlanarConfiguration.from_array(pts)


def euler_quintic_coefficients(m1: float, m2: float, m3: float) -> np.ndarray:
    """Coefficients (highest degree first) for rho = r23 / r12, ordering 1, 2, 3."""
    return np.array(
        [
            m1 + m2,
            3 * m1 + 2 * m2,
            3 * m1 + m2,
            -(m2 + 3 * m3),
            -(2 * m2 + 3 * m3),
            -(m2 + m3),
        ]
    )


def euler_quintic_residual(
    m1: float, m2: float, m3: float, rho: float, normalized: bool = False
) -> float:
    """
    Quintic whose positive root is r23 / r12 of the collinear solution.
    ``normalized`` divides by the sum of the absolute term magnitudes.
    """
    if not rho > 0:
        raise PreconditionError(f"distance ratio must be positive, got {rho}")
    coefficients = euler_quintic_coefficients(m1, m2, m3)
    value = float(np.polyval(coefficients, rho))
    if normalized:
        value /= float(np.polyval(np.abs(coefficients), abs(rho)))
    return value


def euler_ratio(m1: float, m2: float, m3: float) -> float:
    """The unique positive root of the quintic."""
    roots = np.roots(euler_quintic_coefficients(m1, m2, m3))
    positive = [z.real for z in roots if abs(z.imag) < 1e-9 and z.real > 0]
    if len(positive) != 1:
        raise SolverError(f"expected one positive root, found {len(positive)}")
    return positive[0]


def _lagrangian_positions(
    masses: np.ndarray, delta: float, etas: np.ndarray
) -> Callable[[np.ndarray], float]:
    """x -> U + m delta (I - I0) + sum eta_k F_k evaluated through the distances."""
    def g(flat: np.ndarray) -> float:
        arr = pdist(flat.reshape(-1, 2))
        value = potential(arr, masses)
        value += masses.sum() * delta * (
            np.sum(pair_products(masses) * arr**2) / (2 * masses.sum()) - inertia_target(masses)
        )
        for eta, quad in zip(etas, FUZZ_QUADS):
            value += eta * cayley_menger(arr, quad)
        return value

    return g


def _chain_rule_error(pts: np.ndarray, masses: np.ndarray, delta: float, etas: np.ndarray) -> float:
    arr = pdist(pts)
    grad_r = s_vector(arr, masses, delta)
    for eta, quad in zip(etas, FUZZ_QUADS):
        grad_r = grad_r + eta * cm_gradient(pts, quad)

    n = len(pts)
    iu = np.triu_indices(n, k=1)
    unit = (pts[iu[0]] - pts[iu[1]]) / arr[:, None]
    analytic = np.zeros_like(pts)
    np.add.at(analytic, iu[0], grad_r[:, None] * unit)
    np.subtract.at(analytic, iu[1], grad_r[:, None] * unit)

    numeric = richardson_gradient(_lagrangian_positions(masses, delta, etas), pts.ravel())
    return float(np.linalg.norm(numeric - analytic.ravel()) / max(np.linalg.norm(analytic), 1e-300))


def _sample_points(rng: np.random.Generator, collinear: bool) -> np.ndarray:
    while True:
        pts = rng.uniform(-1.0, 1.0, size=(5, 2))
        if collinear:
            pts[1] = pts[0] + rng.uniform(0.2, 0.8) * (pts[2] - pts[0])
        if np.min(pdist(pts)) > 0.05:
            return pts


def identity_fuzzer(seed: int, trials: int) -> FuzzReport:
    """
    Randomized checks of the algebraic identities; every tenth trial places
    P2 on segment P1P3. Trial t uses the t-th child of SeedSequence(seed), so
    a failure is reproduced by (seed, t).
    """
    if trials < 1:
        raise PreconditionError("trials must be positive")
    start_time = time.perf_counter()
    children = np.random.SeedSequence(seed).spawn(trials)
    failures: List[FuzzFailure] = []
    max_errors: Dict[str, float] = {name: 0.0 for name in FUZZ_CHECKS}

    for t, child in enumerate(children):
        rng = np.random.default_rng(child)
        pts = _sample_points(rng, collinear=t % 10 == 9)
        masses = rng.uniform(0.5, 2.0, 5)
        delta = rng.uniform(0.5, 2.0)
        etas = rng.normal(size=3)
        scale = float(np.max(pdist(pts)))
        angles = rng.uniform(0.0, 2 * math.pi, 3)
        r_random = rng.uniform(0.1, 10.0, 10)
        heron_r = rng.uniform(0.1, 10.0, 3)
        _, heron_residual = heron_factorization(heron_r)

        errors = {
            "chain_rule": _chain_rule_error(pts, masses, delta, etas),
            "area_identity": abs(area_identity_residual(pts)) / scale**4,
            "sine_identity": abs(sine_identity_residual(*angles)),
            "factorization": max(factorization_residuals(r_random).values()),
            "heron": abs(heron_residual) / float(np.max(heron_r)) ** 4,
        }
        for name, error in errors.items():
            max_errors[name] = max(max_errors[name], error)
            if not error < FUZZ_TOLERANCES[name]:
                failures.append(FuzzFailure(check=name, trial=t, seed=(seed, t), error=error))

    report = FuzzReport(
        seed=seed, trials=trials, checks=list(FUZZ_CHECKS), max_errors=max_errors, failures=failures
    )
    log_service.log(
        LogLevel.SUCCESS if report.passed else LogLevel.ERROR,
        LogType.FUZZ,
        f"identity fuzzer: {len(failures)} failure(s) in {trials} trials",
        details={"seed": seed, "max_errors": max_errors},
        duration_ms=(time.perf_counter() - start_time) * 1000,
    )
    return report


def _wrap(angle: float) -> float:
    return (angle + math.pi) % (2 * math.pi) - math.pi


def brute_force_minimum(m: MassLike, grid: int = 10_000) -> BruteForceReport:
    """
    Three bodies on a line in order 1, 2, 3: minimize U over the arc of the
    circle |p| = 1 where r12 > 0 and r23 > 0, on a uniform grid of cells, and
    compare with the Newton solution mapped to the same angle.
    """
    masses = as_masses(m)
    if masses.size != 3:
        raise PreconditionError("brute-force minimum is defined for three bodies")
    if grid < 10:
        raise PreconditionError("grid must have at least 10 cells")

    psi = np.asarray(psi_transform(masses).psi)
    row12, row13 = psi[0], psi[1]
    row23 = row13 - row12
    alpha = math.atan2(row12[1], row12[0])
    d = _wrap(math.atan2(row23[1], row23[0]) - alpha)
    lo = alpha - math.pi / 2 + max(0.0, d)
    hi = alpha + math.pi / 2 + min(0.0, d)

    edges = np.linspace(lo, hi, grid + 1)
    centers = 0.5 * (edges[:-1] + edges[1:])
    p = np.vstack([np.cos(centers), np.sin(centers)])
    r12, r13 = row12 @ p, row13 @ p
    r23 = r13 - r12
    U = masses[0] * masses[1] / r12 + masses[0] * masses[2] / r13 + masses[1] * masses[2] / r23
    k = int(np.argmin(U))

    solution = solve_ordering(masses, Ordering(perm=(1, 2, 3)))
    p_sol = p_coordinates(solution, masses)
    phi = math.atan2(p_sol[1], p_sol[0])
    phi = lo + (phi - lo) % (2 * math.pi)

    cell = (hi - lo) / grid
    return BruteForceReport(
        grid=grid,
        arc=(lo, hi),
        phi_grid=float(centers[k]),
        phi_solution=phi,
        cell_width=cell,
        within_one_cell=abs(centers[k] - phi) <= cell,
        u_min=float(U[k]),
        endpoint_ratio=float(min(U[0], U[-1]) / U[k]),
    )


# 單例
oracle_solver = OracleSolver()

"""
Five-body trapezoid central configurations

P1, P2, P3 collinear with P2 between P1 and P3, P1P3 parallel to P4P5.
Unknowns are the ten mutual distances and the multipliers
(delta, omega, theta) of I = I0, T2 = 0 and L123 = 0.
"""

import logging
import math
import time
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as LA
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.optimize import brentq
from scipy.spatial.distance import pdist

from ccdist.config import settings
from ccdist.errors import (
    ClassificationError,
    CollinearDegeneracyError,
    InvalidRegionError,
    NonConvergenceError,
    PreconditionError,
    SingularSystemError,
    SolverError,
)
from ccdist.models import (
    ClassificationFlags,
    ClusterSummary,
    DistanceVector,
    EtaReport,
    FamilyMember,
    MassVector,
    MultiplierSet,
    PlanarConfiguration,
    SymmetryVerdict,
    TrapezoidGuess,
    TrapezoidSolution,
    UniquenessReport,
)
from ccdist.services.constraints import (
    QUAD_F4,
    QUAD_F5,
    l_constraint,
    l_gradient,
    membership,
    t2,
    t2_gradient,
    t2_magnitude,
)
from ccdist.services.distgeo import (
    DistanceLike,
    PositionLike,
    as_distances,
    as_positions,
    cm_gradient,
    pair_index,
    quadruple_areas,
)
from ccdist.services.energetics import (
    MassLike,
    as_masses,
    inertia,
    inertia_target,
    lagrangian,
    pair_products,
    r_vector,
    s_vector,
)
from ccdist.services.log_service import LogLevel, LogType, log_service
from ccdist.services.newton import damped_newton

logger = logging.getLogger(__name__)

# packed slots for n = 5
R12, R13, R14, R15, R23, R24, R25, R34, R35, R45 = range(10)

L123_GRADIENT = l_gradient(5)

# constant second derivatives of T2
T2_HESSIAN = np.zeros((10, 10))
T2_HESSIAN[R13, R45] = T2_HESSIAN[R45, R13] = 2.0
T2_HESSIAN[R14, R14] = -2.0
T2_HESSIAN[R15, R15] = 2.0
T2_HESSIAN[R34, R34] = 2.0
T2_HESSIAN[R35, R35] = -2.0

# relabeling 1<->3, 4<->5 (mirror across the axis of P1P3)
MIRROR = {1: 3, 2: 2, 3: 1, 4: 5, 5: 4}


def _masses5(m: MassLike) -> np.ndarray:
    masses = as_masses(m)
    if masses.size != 5:
        raise PreconditionError(f"trapezoid problem needs 5 masses, got {masses.size}")
    if np.any(masses <= 0):
        raise PreconditionError("masses must be positive")
    return masses


def residual_system(
    r: DistanceLike,
    multipliers: MultiplierSet,
    m: MassLike,
    target: Optional[float] = None,
) -> np.ndarray:
    """
    Thirteen residuals: grad_r W (ten rows), I - I0, T2, L123.

    grad_r W = S + omega grad T2 + theta grad L123, i.e. in order
    S12+theta, S13+2 r45 omega-theta, S14-2 r14 omega, S15+2 r15 omega,
    S23+theta, S24, S25, S34+2 r34 omega, S35-2 r35 omega, S45+2 r13 omega.
    """
    arr = as_distances(r)
    masses = _masses5(m)
    target = inertia_target(masses) if target is None else target
    d, w, t = multipliers.delta, multipliers.omega, multipliers.theta
    grad = s_vector(arr, masses, d) + w * t2_gradient(arr) + t * L123_GRADIENT
    return np.concatenate([grad, [inertia(arr, masses) - target, t2(arr), l_constraint(arr)]])


def jacobian_system(r: DistanceLike, multipliers: MultiplierSet, m: MassLike) -> np.ndarray:
    arr = as_distances(r)
    masses = _masses5(m)
    w = pair_products(masses)
    J = np.zeros((13, 13))
    J[:10, :10] = np.diag(r_vector(arr, masses, multipliers.delta)) + multipliers.omega * T2_HESSIAN
    J[:10, 10] = w * arr
    J[:10, 11] = t2_gradient(arr)
    J[:10, 12] = L123_GRADIENT
    J[10, :10] = w * arr / masses.sum()
    J[11, :10] = t2_gradient(arr)
    J[12, :10] = L123_GRADIENT
    return J


def residual_scales(
    r: DistanceLike, multipliers: MultiplierSet, m: MassLike, target: Optional[float] = None
) -> np.ndarray:
    """Magnitude of the terms composing each residual row."""
    arr = as_distances(r)
    masses = _masses5(m)
    target = inertia_target(masses) if target is None else target
    w = pair_products(masses)
    rows = (
        w * (abs(multipliers.delta) * arr + arr**-2)
        + abs(multipliers.omega) * np.abs(t2_gradient(arr))
        + abs(multipliers.theta) * np.abs(L123_GRADIENT)
    )
    return np.concatenate([rows, [target, t2_magnitude(arr), arr[R12] + arr[R13] + arr[R23]]])


def lagrangian_w245(
    r: DistanceLike,
    m: MassLike,
    delta: float,
    omega: float,
    theta: float,
) -> float:
    """W = U + m delta (I - I0) + omega T2 + theta L123"""
    arr = as_distances(r)
    return lagrangian(arr, m, delta) + omega * t2(arr) + theta * l_constraint(arr)


def hessian_w245(r: DistanceLike, delta: float, omega: float, m: MassLike) -> np.ndarray:
    """Second derivatives of W in r: diag(R) plus omega times the T2 block."""
    arr = as_distances(r)
    return np.diag(r_vector(arr, _masses5(m), delta)) + omega * T2_HESSIAN


def spectrum_closed_form(r: DistanceLike, delta: float, omega: float, m: MassLike) -> np.ndarray:
    """
    Eigenvalues of hessian_w245 without decomposition:
    R12, R23, R24, R25, R14-2w, R15+2w, R34+2w, R35-2w and the two eigenvalues
    of the (r13, r45) block [[R13, 2w], [2w, R45]], larger first.
    """
    R = r_vector(as_distances(r), _masses5(m), delta)
    root = math.sqrt((R[R13] - R[R45]) ** 2 + 16.0 * omega**2)
    return np.array(
        [
            R[R12],
            R[R23],
            R[R24],
            R[R25],
            R[R14] - 2 * omega,
            R[R15] + 2 * omega,
            R[R34] + 2 * omega,
            R[R35] - 2 * omega,
            0.5 * (R[R13] + R[R45] + root),
            0.5 * (R[R13] + R[R45] - root),
        ]
    )


def trapezoid_positions(rho: float, h: float, offset: float = 0.0) -> np.ndarray:
    """P1=(-1,0), P2=(offset,0), P3=(1,0), P4=(rho,h), P5=(-rho,h)."""
    return np.array([[-1.0, 0.0], [offset, 0.0], [1.0, 0.0], [rho, h], [-rho, h]])


def initial_guess_symmetric(
    m: MassLike,
    rho: float,
    h: float,
    offset: float = 0.0,
    target: Optional[float] = None,
) -> TrapezoidGuess:
    """
    Distances of the symmetric trapezoid with r45/r13 = rho and height h
    (in units of r13/2), scaled to I = I0, with multipliers fitted from the
    r24, r12 and r14 rows of the residual system.
    """
    masses = _masses5(m)
    if rho <= 0 or h <= 0:
        raise PreconditionError("rho and h must be positive")
    if abs(offset) >= 1:
        raise PreconditionError("P2 must lie strictly between P1 and P3")
    target = inertia_target(masses) if target is None else target

    arr = pdist(trapezoid_positions(rho, h, offset))
    arr *= math.sqrt(target / inertia(arr, masses))
    delta = arr[R24] ** -3
    S = s_vector(arr, masses, delta)
    return TrapezoidGuess(
        r=arr.tolist(), delta=delta, omega=S[R14] / (2 * arr[R14]), theta=-S[R12]
    )


def symmetric_family_member(b: float) -> FamilyMember:
    """
    Symmetric trapezoid (P2 at the midpoint, r45 / r13 = b) that is central
    for positive masses m1 = m3 = 1, m2, m4 = m5.

    The height solves r34^-3 + r14^-3 = 2 r24^-3 above h = sqrt(3) b; the
    masses follow from the linear position equations with delta = r24^-3.
    """
    if b <= 0:
        raise PreconditionError("base ratio must be positive")

    def shape_defect(h: float) -> float:
        r14, r24, r34 = math.hypot(1 + b, h), math.hypot(b, h), math.hypot(1 - b, h)
        return r34**-3 + r14**-3 - 2 * r24**-3

    h_lo = math.sqrt(3.0) * b * (1 + 1e-12)
    if shape_defect(h_lo) <= 0:
        raise PreconditionError(f"no central member with positive masses for b={b}")
    h_hi = 2 * h_lo
    while shape_defect(h_hi) >= 0:
        h_hi *= 2
        if h_hi > 1e8:
            raise PreconditionError(f"height bracket not found for b={b}")
    h = brentq(shape_defect, h_lo, h_hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)

    delta = math.hypot(b, h) ** -3

    def excess(distance: float) -> float:
        return distance**-3 - delta

    a34, a45, a13, a23 = excess(math.hypot(1 - b, h)), excess(2 * b), excess(2.0), excess(1.0)
    m_outer = a34 / (b * a45)
    m_mid = 2 * (a34**2 / a45 - a13) / a23
    if m_outer <= 0 or m_mid <= 0:
        raise PreconditionError(f"masses for b={b} are not positive ({m_mid:.4g}, {m_outer:.4g})")

    return FamilyMember(
        base_ratio=b,
        height=h,
        masses=MassVector(masses=[1.0, m_mid, 1.0, m_outer, m_outer]),
        positions=PlanarConfiguration.from_array(trapezoid_positions(b, h)),
    )


def classify(
    solution: TrapezoidSolution,
    m: MassLike,
    strict: bool = False,
    tol: Optional[float] = None,
) -> ClassificationFlags:
    """
    Check the relations every trapezoid central configuration satisfies:
    positive multipliers, r24 = r25 = delta^(-1/3), the distance ordering
    r12, r23, r15, r34, r45 < r24 = r25 < r14, r35, and a positive Hessian
    spectrum that agrees with the eigendecomposition.
    """
    tol = settings.classification_tol if tol is None else tol
    masses = _masses5(m)
    arr = solution.r.array
    d, w, t = solution.multipliers.delta, solution.multipliers.omega, solution.multipliers.theta
    scale = float(np.max(arr))

    r24, r25 = arr[R24], arr[R25]
    r24_equals_r25 = (
        d > 0
        and abs(r24 - r25) <= tol * scale
        and abs(r24 - d ** (-1 / 3)) <= tol * scale
    )

    margin = settings.inequality_margin * scale
    short = arr[[R12, R23, R15, R34, R45]]
    long = arr[[R14, R35]]
    middle = max(r24, r25)
    chain = bool(np.all(short + margin < min(r24, r25)) and np.all(middle + margin < long))

    spectrum = spectrum_closed_form(arr, d, w, masses)
    numeric = LA.eigvalsh(hessian_w245(arr, d, w, masses))
    magnitude = float(np.max(np.abs(numeric)))
    matches = bool(np.allclose(np.sort(spectrum), numeric, rtol=0, atol=1e-9 * magnitude))

    checks = [
        (d > 0, "delta > 0"),
        (w > 0, "omega > 0"),
        (t > 0, "theta > 0"),
        (r24_equals_r25, "r24 = r25 = delta^(-1/3)"),
        (chain, "r12, r23, r15, r34, r45 < r24 = r25 < r14, r35"),
        (bool(np.all(spectrum > 0)), "Hessian spectrum positive"),
        (matches, "closed-form spectrum matches eigendecomposition"),
    ]
    violations = [name for ok, name in checks if not ok]

    flags = ClassificationFlags(
        delta_positive=d > 0,
        omega_positive=w > 0,
        theta_positive=t > 0,
        r24_equals_r25=r24_equals_r25,
        inequality_chain=chain,
        spectrum_positive=bool(np.all(spectrum > 0)),
        spectrum_matches_numeric=matches,
        violations=violations,
    )

    if violations:
        log_service.log(
            LogLevel.WARNING,
            LogType.CLASSIFY,
            "classification relations violated",
            details={"violations": violations},
        )
        if strict:
            raise ClassificationError("solution violates classification relations", violations)
    return flags


def _relabel(arr: np.ndarray, masses: np.ndarray, mapping: Dict[int, int]):
    new_arr = np.empty_like(arr)
    for i in range(1, 6):
        for j in range(i + 1, 6):
            a, b = sorted((mapping[i], mapping[j]))
            new_arr[pair_index(a, b, 5).linear] = arr[pair_index(i, j, 5).linear]
    new_masses = np.empty_like(masses)
    for i in range(1, 6):
        new_masses[mapping[i] - 1] = masses[i - 1]
    return new_arr, new_masses


def symmetry_analysis(
    solution: TrapezoidSolution, m: MassLike, tol: Optional[float] = None
) -> SymmetryVerdict:
    """
    Sort a solution into rectangle (r13 = r45), symmetric isosceles
    (r13 < r45: mirror-equal distances and masses) or asymmetric_r13_gt_r45
    (one-sided inequalities), after relabeling so r14 <= r35.
    """
    tol = settings.symmetry_tol if tol is None else tol
    arr = solution.r.array
    masses = _masses5(m)

    mirrored = arr[R14] > arr[R35]
    if mirrored:
        arr, masses = _relabel(arr, masses, MIRROR)

    scale = float(np.max(arr))
    mass_scale = float(np.max(masses))
    d_tol, m_tol = tol * scale, tol * mass_scale

    distance_defects = {
        "r12-r23": float(arr[R12] - arr[R23]),
        "r14-r35": float(arr[R14] - arr[R35]),
        "r15-r34": float(arr[R15] - arr[R34]),
        "r24-r25": float(arr[R24] - arr[R25]),
    }
    mass_defects = {
        "m1-m3": float(masses[0] - masses[2]),
        "m4-m5": float(masses[3] - masses[4]),
    }
    notes = []
    if mirrored:
        notes.append("relabeled 1<->3, 4<->5 so that r14 <= r35")

    if abs(arr[R13] - arr[R45]) <= settings.classification_tol * scale:
        ok = all(abs(distance_defects[k]) <= d_tol for k in ("r12-r23", "r14-r35", "r15-r34"))
        kind = "rectangle" if ok else "violation"
    elif arr[R13] < arr[R45]:
        ok = all(abs(v) <= d_tol for v in distance_defects.values()) and all(
            abs(v) <= m_tol for v in mass_defects.values()
        )
        kind = "symmetric_isosceles" if ok else "violation"
    else:
        ok = (
            arr[R12] <= arr[R23] + d_tol
            and arr[R15] <= arr[R34] + d_tol
            and masses[0] <= masses[2] + m_tol
            and masses[3] >= masses[4] - m_tol
        )
        kind = "asymmetric_r13_gt_r45" if ok else "violation"

    if kind == "violation":
        notes.append("symmetry relations implied by the side ordering do not hold")

    return SymmetryVerdict(
        symmetry_class=kind,
        mirrored=mirrored,
        distance_defects=distance_defects,
        mass_defects=mass_defects,
        notes=notes,
    )


# determinant -> (quadruple, the pair that appears in no other determinant)
ETA_ANCHORS = {
    "eta5": (QUAD_F5, (3, 4)),
    "eta4": (QUAD_F4, (3, 5)),
    "eta3": ((1, 2, 4, 5), (4, 5)),
}


def eta_multipliers(
    x: PositionLike, m: MassLike, delta: float, tol: float = 1e-8
) -> EtaReport:
    """
    Multipliers of the three four-body determinants in
    U + m delta (I - I0) + eta3 F3 + eta4 F4 + eta5 F5 at a planar configuration.

    Each eta is solved from the one pair its determinant owns; the remaining
    seven gradient components must then vanish for a central configuration.
    """
    pts = as_positions(x)
    masses = _masses5(m)
    arr = pdist(pts)
    S = s_vector(arr, masses, delta)
    area_floor = np.finfo(float).eps * float(np.max(arr)) ** 4

    etas = {}
    gradient = S.copy()
    for name, (quad, (a, b)) in ETA_ANCHORS.items():
        areas = quadruple_areas(pts, quad)
        product = areas[a].value * areas[b].value
        if abs(product) <= area_floor:
            raise CollinearDegeneracyError(f"oriented areas for bodies {a}, {b} vanish")
        pair = pair_index(a, b, 5).linear
        etas[name] = float(S[pair] / (64.0 * arr[pair] * product))
        gradient += etas[name] * cm_gradient(pts, quad)

    scale = float(np.max(np.abs(S))) or 1.0
    max_residual = float(np.max(np.abs(gradient)) / scale)
    return EtaReport(
        eta=etas, residuals=gradient.tolist(), max_residual=max_residual, passed=max_residual < tol
    )


def cluster_vectors(vectors: Sequence[np.ndarray], tol: float) -> List[ClusterSummary]:
    """Single-linkage clusters under the max-norm, distance tol relative to the largest entry."""
    if not vectors:
        return []
    X = np.asarray(vectors, dtype=float)
    if len(X) == 1:
        return [ClusterSummary(size=1, representative=X[0].tolist())]
    threshold = tol * max(float(np.max(np.abs(X))), 1.0)
    tree = linkage(X, method="single", metric="chebyshev")
    labels = fcluster(tree, t=threshold, criterion="distance")
    clusters = []
    for label in np.unique(labels):
        members = X[labels == label]
        clusters.append(ClusterSummary(size=len(members), representative=members[0].tolist()))
    return sorted(clusters, key=lambda c: -c.size)


class TrapezoidSolver:
    """五體梯形求解器"""

    def newton_solve(
        self,
        m: MassLike,
        guess: TrapezoidGuess,
        tol: Optional[float] = None,
        max_iter: Optional[int] = None,
        target: Optional[float] = None,
    ) -> TrapezoidSolution:
        """
        Damped Newton on the 13x13 system; the converged point must lie in
        the trapezoid set, then it is classified.

        Args:
            m: five positive masses
            guess: distances and multipliers to start from
            tol: relative residual tolerance
            max_iter: Newton iteration cap
            target: inertia normalization, default 1 / (2m)

        Returns:
            TrapezoidSolution with flags and symmetry verdict
        """
        masses = _masses5(m)
        target = inertia_target(masses) if target is None else target
        r0 = np.asarray(guess.r, dtype=float)
        if r0.size != 10 or not np.all(np.isfinite(r0)):
            raise PreconditionError("initial guess must hold ten finite distances")
        if np.any(r0 <= 0):
            raise PreconditionError("initial guess has a non-positive distance")

        def split(z: np.ndarray) -> Tuple[np.ndarray, MultiplierSet]:
            return z[:10], MultiplierSet(delta=z[10], omega=z[11], theta=z[12])

        def residual(z: np.ndarray) -> np.ndarray:
            return residual_system(*split(z), masses, target)

        def jacobian(z: np.ndarray) -> np.ndarray:
            return jacobian_system(*split(z), masses)

        def scales(z: np.ndarray) -> np.ndarray:
            return residual_scales(*split(z), masses, target)

        z0 = np.concatenate([r0, [guess.delta, guess.omega, guess.theta]])
        start_time = time.perf_counter()
        try:
            result = damped_newton(
                residual,
                jacobian,
                z0,
                scales,
                admissible=lambda z: bool(np.all(z[:10] > 0)),
                tol=tol,
                max_iter=max_iter,
            )
        except SolverError as e:
            log_service.log(
                LogLevel.ERROR,
                LogType.SOLVER,
                f"trapezoid Newton failed: {e}",
                details={"iterations": e.iterations, "residual_norm": e.residual_norm},
                duration_ms=(time.perf_counter() - start_time) * 1000,
            )
            raise

        r, multipliers = split(result.z)
        solution = TrapezoidSolution(
            r=DistanceVector(n=5, entries=r.tolist()),
            multipliers=multipliers,
            residual_norm=result.residual_norm,
            iterations=result.iterations,
            spectrum=spectrum_closed_form(r, multipliers.delta, multipliers.omega, masses).tolist(),
        )
        solution.constraints = membership(r, masses, target=target)
        duration_ms = (time.perf_counter() - start_time) * 1000

        if not solution.constraints.in_t:
            log_service.log(
                LogLevel.WARNING,
                LogType.SOLVER,
                "converged outside the trapezoid configuration set",
                details={
                    "iterations": result.iterations,
                    "f2": solution.constraints.f2,
                    "f4": solution.constraints.f4,
                    "f5": solution.constraints.f5,
                },
                duration_ms=duration_ms,
            )
            raise InvalidRegionError(
                "converged point is not a realizable trapezoid",
                solution=solution,
                iterations=result.iterations,
                residual_norm=result.residual_norm,
            )

        solution.flags = classify(solution, masses)
        solution.symmetry = symmetry_analysis(solution, masses)
        log_service.log(
            LogLevel.SUCCESS,
            LogType.SOLVER,
            "trapezoid central configuration found",
            details={
                "iterations": result.iterations,
                "residual_norm": result.residual_norm,
                "class": solution.symmetry.symmetry_class,
            },
            duration_ms=duration_ms,
        )
        return solution

    def uniqueness_probe(
        self,
        m: MassLike,
        starts: int,
        seed: Optional[int] = None,
        rho_range: Optional[Tuple[float, float]] = None,
        height_range: Optional[Tuple[float, float]] = None,
        offset: Optional[float] = None,
        tol: Optional[float] = None,
    ) -> UniquenessReport:
        """
        Multi-start Newton from random symmetric-trapezoid guesses.

        Realizable solutions are clustered for the headline count; converged
        points outside the trapezoid set are clustered separately.
        """
        if starts < 2:
            raise PreconditionError("uniqueness probe needs at least two starts")
        masses = _masses5(m)
        seed = settings.seed if seed is None else seed
        rho_lo, rho_hi = rho_range or (settings.probe_rho_min, settings.probe_rho_max)
        h_lo, h_hi = height_range or (settings.probe_height_min, settings.probe_height_max)
        offset = settings.probe_offset if offset is None else offset

        rng = np.random.default_rng(seed)
        samples = np.column_stack(
            [
                rng.uniform(rho_lo, rho_hi, starts),
                rng.uniform(h_lo, h_hi, starts),
                rng.uniform(-offset, offset, starts),
            ]
        )

        realizable: List[np.ndarray] = []
        outside: List[np.ndarray] = []
        failures = 0
        start_time = time.perf_counter()
        for rho, h, off in samples:
            guess = initial_guess_symmetric(masses, rho, h, off)
            try:
                solution = self.newton_solve(masses, guess, tol=tol)
                realizable.append(solution.r.array)
            except InvalidRegionError as e:
                outside.append(e.solution.r.array)
            except (NonConvergenceError, SingularSystemError):
                failures += 1

        clusters = cluster_vectors(realizable, settings.cluster_tol)
        report = UniquenessReport(
            starts=starts,
            seed=seed,
            converged=len(realizable) + len(outside),
            failures=failures,
            clusters=clusters,
            nonrealizable_clusters=cluster_vectors(outside, settings.cluster_tol),
            message=f"{len(clusters)} distinct solution(s)" if clusters else "no solution found",
        )
        log_service.log(
            LogLevel.INFO,
            LogType.PROBE,
            report.message,
            details={
                "starts": starts,
                "seed": seed,
                "failures": failures,
                "outside": len(outside),
            },
            duration_ms=(time.perf_counter() - start_time) * 1000,
        )
        return report


# 單例
trapezoid_solver = TrapezoidSolver()

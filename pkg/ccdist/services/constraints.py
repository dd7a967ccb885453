"""
Constraint polynomials for the five-body trapezoid problem

T2 (P1P3 parallel to P4P5), the collinearity constraints L_ijk, the factor
polynomials V/K of the three four-body determinants

    F2 = CM(1,3,4,5) = V2 T2 - 2 K2^2
    F4 = CM(1,2,3,5) = V4 L123 - 2 K4^2
    F5 = CM(1,2,3,4) = V5 L123 - 2 K5^2

and membership in the configuration sets built from them.
"""

from typing import Dict, Optional, Tuple

import numpy as np

from ccdist.config import settings
from ccdist.errors import PreconditionError
from ccdist.models import ConstraintReport, GradientCollinearityReport
from ccdist.services.distgeo import (
    DistanceLike,
    as_distances,
    body_count,
    cayley_menger,
    is_realizable,
    pair_count,
    pair_index,
)
from ccdist.services.energetics import MassLike, as_masses, inertia, inertia_target
from ccdist.services.finite_diff import central_gradient

QUAD_F2 = (1, 3, 4, 5)
QUAD_F4 = (1, 2, 3, 5)
QUAD_F5 = (1, 2, 3, 4)

LEMMA_NOTE = (
    "uses F2 = CM(1,3,4,5), F4 = CM(1,2,3,5), F5 = CM(1,2,3,4); "
    "the statement listing F3 is read as F5"
)


def _five(r: DistanceLike) -> np.ndarray:
    arr = as_distances(r)
    if arr.size != 10:
        raise ValueError(f"expected 10 distances of a five-body configuration, got {arr.size}")
    return arr


def t2(r: DistanceLike) -> float:
    """T2 = 2 r13 r45 - r14^2 + r15^2 + r34^2 - r35^2"""
    r12, r13, r14, r15, r23, r24, r25, r34, r35, r45 = _five(r)
    return 2.0 * r13 * r45 - r14**2 + r15**2 + r34**2 - r35**2


def t2_gradient(r: DistanceLike) -> np.ndarray:
    r12, r13, r14, r15, r23, r24, r25, r34, r35, r45 = _five(r)
    return np.array([0.0, 2 * r45, -2 * r14, 2 * r15, 0.0, 0.0, 0.0, 2 * r34, -2 * r35, 2 * r13])


def t2_magnitude(r: DistanceLike) -> float:
    """Sum of the absolute terms of T2."""
    r12, r13, r14, r15, r23, r24, r25, r34, r35, r45 = _five(r)
    return 2.0 * r13 * r45 + r14**2 + r15**2 + r34**2 + r35**2


def l_constraint(r: DistanceLike, triple: Tuple[int, int, int] = (1, 2, 3)) -> float:
    """L_ijk = r_ij - r_ik + r_jk, zero iff P_j lies on segment P_i P_k."""
    i, j, k = triple
    if not i < j < k:
        raise ValueError(f"triple must be increasing, got {triple}")
    arr = as_distances(r)
    n = body_count(arr.size)
    return float(
        arr[pair_index(i, j, n).linear]
        - arr[pair_index(i, k, n).linear]
        + arr[pair_index(j, k, n).linear]
    )


def l_gradient(n: int, triple: Tuple[int, int, int] = (1, 2, 3)) -> np.ndarray:
    i, j, k = triple
    grad = np.zeros(pair_count(n))
    grad[pair_index(i, j, n).linear] = 1.0
    grad[pair_index(i, k, n).linear] = -1.0
    grad[pair_index(j, k, n).linear] = 1.0
    return grad


def v2_k2(r: DistanceLike) -> Tuple[float, float]:
    r12, r13, r14, r15, r23, r24, r25, r34, r35, r45 = _five(r)
    v2 = -2.0 * (
        r35**2 * (r13 - r45) ** 2
        - r14**2 * r35**2
        + (r13**2 - r15**2) * (r45**2 - r34**2)
    )
    k2 = r13 * (r34**2 - r35**2 - r45**2) + r45 * (r13**2 - r15**2 + r35**2)
    return float(v2), float(k2)


def _v_k(r12, r13, r23, r1x, r2x, r3x) -> Tuple[float, float]:
    """Factors of CM(1,2,3,x) with respect to L123."""
    v = (
        2.0
        * (r12 - r13 - r23)
        * (
            (r12 * r13 - r1x**2) ** 2
            + (r23**2 - r2x**2 - r3x**2) * r1x**2
            - r13**2 * r2x**2
            + (r2x**2 - r12**2) * r3x**2
        )
    )
    k = r13 * (r12**2 + r1x**2 - r2x**2) - r12 * (r13**2 + r1x**2 - r3x**2)
    return float(v), float(k)


def v5_k5(r: DistanceLike) -> Tuple[float, float]:
    r12, r13, r14, r15, r23, r24, r25, r34, r35, r45 = _five(r)
    return _v_k(r12, r13, r23, r14, r24, r34)


def v4_k4(r: DistanceLike) -> Tuple[float, float]:
    """V5/K5 with body 4 replaced by body 5."""
    r12, r13, r14, r15, r23, r24, r25, r34, r35, r45 = _five(r)
    return _v_k(r12, r13, r23, r15, r25, r35)


def heron_factorization(
    r: DistanceLike, bodies: Tuple[int, int, int] = (1, 2, 3)
) -> Tuple[float, float]:
    """
    F3 = Q * L with Q = (a - b - c)(a + b - c)(a + b + c), a = r_ij, b = r_ik, c = r_jk.

    Returns:
        (Q, F3 - Q * L)
    """
    arr = as_distances(r)
    n = body_count(arr.size)
    i, j, k = bodies
    a = arr[pair_index(i, j, n).linear]
    b = arr[pair_index(i, k, n).linear]
    c = arr[pair_index(j, k, n).linear]
    q = (a - b - c) * (a + b - c) * (a + b + c)
    f3 = cayley_menger(arr, bodies)
    return float(q), float(f3 - q * (a - b + c))


def factorization_residuals(r: DistanceLike) -> Dict[str, float]:
    """Residuals of the three factorizations, relative to max(r)^6."""
    arr = _five(r)
    scale6 = float(np.max(arr)) ** 6
    v2, k2 = v2_k2(arr)
    v4, k4 = v4_k4(arr)
    v5, k5 = v5_k5(arr)
    l123 = l_constraint(arr)
    return {
        "f2": abs(cayley_menger(arr, QUAD_F2) - (v2 * t2(arr) - 2 * k2**2)) / scale6,
        "f4": abs(cayley_menger(arr, QUAD_F4) - (v4 * l123 - 2 * k4**2)) / scale6,
        "f5": abs(cayley_menger(arr, QUAD_F5) - (v5 * l123 - 2 * k5**2)) / scale6,
    }


def gradient_collinearity(
    r: DistanceLike, tol: Optional[float] = None, step: Optional[float] = None
) -> GradientCollinearityReport:
    """
    On the trapezoid set the determinant gradients are parallel to the
    constraint gradients: grad F2 = V2 grad T2, grad F4 = V4 grad L123,
    grad F5 = V5 grad L123. Checked with central differences.
    """
    tol = settings.membership_tol if tol is None else tol
    arr = _five(r)
    scale = float(np.max(arr))
    if abs(t2(arr)) > tol * scale**2 or abs(l_constraint(arr)) > tol * scale:
        raise PreconditionError("distance vector does not satisfy T2 = 0 and L123 = 0")
    if not is_realizable(arr).in_g2:
        raise PreconditionError("distance vector is not a realizable planar configuration")

    v2, _ = v2_k2(arr)
    v4, _ = v4_k4(arr)
    v5, _ = v5_k5(arr)
    lgrad = l_gradient(5)
    expected = {
        "f2": (QUAD_F2, v2 * t2_gradient(arr)),
        "f4": (QUAD_F4, v4 * lgrad),
        "f5": (QUAD_F5, v5 * lgrad),
    }

    errors = {}
    for name, (quad, analytic) in expected.items():
        numeric = central_gradient(lambda z, q=quad: cayley_menger(z, q), arr, step)
        errors[name] = float(np.linalg.norm(numeric - analytic) / np.linalg.norm(analytic))

    return GradientCollinearityReport(
        v2=v2, v4=v4, v5=v5, errors=errors, passed=all(e < 1e-6 for e in errors.values())
    )


def membership(
    r: DistanceLike,
    m: MassLike,
    tol: Optional[float] = None,
    target: Optional[float] = None,
) -> ConstraintReport:
    """
    Set predicates of a five-body distance vector:

    G      realizable (triangle inequalities, determinant sign)
    G2     strict triangles on {1,3,4,5}
    M+     positive, I = I0, T2 = 0, L123 = 0
    H      G and G2 with T2 = 0, L123 = 0
    N      G and G2 with I = I0, F2 = F4 = F5 = 0
    T      intersection of M+, H and N
    """
    tol = settings.membership_tol if tol is None else tol
    arr = _five(r)
    masses = as_masses(m)
    target = inertia_target(masses) if target is None else target
    scale = float(np.max(np.abs(arr)))

    t2_value = t2(arr)
    l_value = l_constraint(arr)
    f2 = cayley_menger(arr, QUAD_F2)
    f4 = cayley_menger(arr, QUAD_F4)
    f5 = cayley_menger(arr, QUAD_F5)
    positive = bool(np.all(arr > 0))
    inertia_defect = inertia(arr, masses) - target

    realizability = is_realizable(arr)
    in_g = positive and realizability.realizable
    in_g2 = in_g and realizability.in_g2

    on_t2 = abs(t2_value) <= tol * scale**2
    on_l = abs(l_value) <= tol * scale
    on_i = abs(inertia_defect) <= tol * target
    on_f = max(abs(f2), abs(f4), abs(f5)) <= tol * scale**6

    in_m_plus = positive and on_i and on_t2 and on_l
    in_h = in_g2 and on_t2 and on_l
    in_n = in_g2 and on_i and on_f

    return ConstraintReport(
        t2=t2_value,
        l123=l_value,
        inertia_defect=inertia_defect,
        f2=f2,
        f4=f4,
        f5=f5,
        in_g=in_g,
        in_g2=in_g2,
        in_m_plus=in_m_plus,
        in_n=in_n,
        in_h=in_h,
        in_t=in_m_plus and in_h and in_n,
        notes=[LEMMA_NOTE],
    )

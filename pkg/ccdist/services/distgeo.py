"""
Distance geometry

Pair indexing of packed distance vectors, Cayley-Menger determinants,
oriented areas and realizability predicates.

Distance vectors are packed in lexicographic pair order
(1,2), (1,3), ..., (1,n), (2,3), ..., (n-1,n), the same order used by
scipy.spatial.distance.pdist / squareform.
"""

import math
from functools import lru_cache
from itertools import combinations
from typing import Dict, Iterable, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg as LA
from scipy.spatial.distance import pdist, squareform

from ccdist.config import settings
from ccdist.errors import (
    ArityError,
    DegenerateConfigurationError,
    NonRealizableError,
    PairIndexError,
)
from ccdist.models import (
    DistanceVector,
    OrientedArea,
    PairIndex,
    PlanarConfiguration,
    RealizabilityReport,
)

DistanceLike = Union[DistanceVector, np.ndarray, Sequence[float]]
PositionLike = Union[PlanarConfiguration, np.ndarray, Sequence[Sequence[float]]]


def pair_count(n: int) -> int:
    return n * (n - 1) // 2


def body_count(size: int) -> int:
    """Inverse of pair_count."""
    n = int(round((1 + math.sqrt(1 + 8 * size)) / 2))
    if pair_count(n) != size:
        raise ValueError(f"{size} is not the length of a packed distance vector")
    return n


def pair_index(i: int, j: int, n: int) -> PairIndex:
    """
    Linear slot of the pair (i, j), 1-based bodies, 0-based slot.

    pair_index(1, 2, 5).linear == 0, pair_index(4, 5, 5).linear == 9
    """
    if not (1 <= i < j <= n):
        raise PairIndexError(f"invalid pair ({i}, {j}) for n={n}")
    return PairIndex(i=i, j=j, linear=(i - 1) * (2 * n - i) // 2 + (j - i - 1))


def pair_from_linear(linear: int, n: int) -> PairIndex:
    if not 0 <= linear < pair_count(n):
        raise PairIndexError(f"slot {linear} out of range for n={n}")
    i, offset = 1, linear
    while offset >= n - i:
        offset -= n - i
        i += 1
    return PairIndex(i=i, j=i + 1 + offset, linear=linear)


@lru_cache(maxsize=None)
def pairs(n: int) -> Tuple[Tuple[int, int], ...]:
    return tuple(combinations(range(1, n + 1), 2))


def pair_label(i: int, j: int, n: int) -> str:
    """Report key for r_ij; underscores separate indices once they need two digits."""
    if n > 9:
        return f"r_{i}_{j}"
    return f"r_{i}{j}"


def as_distances(r: DistanceLike) -> np.ndarray:
    if isinstance(r, DistanceVector):
        return r.array
    return np.asarray(r, dtype=float).ravel()


def as_positions(x: PositionLike) -> np.ndarray:
    if isinstance(x, PlanarConfiguration):
        return x.array
    return np.asarray(x, dtype=float).reshape(-1, 2)


def distance_matrix(r: DistanceLike) -> np.ndarray:
    return squareform(as_distances(r), checks=False)


def distances_from_positions(x: PositionLike) -> DistanceVector:
    pts = as_positions(x)
    arr = pdist(pts)
    scale = max(float(np.max(np.abs(pts))), 1.0)
    collided = np.flatnonzero(arr <= np.finfo(float).eps * scale)
    if collided.size:
        pair = pair_from_linear(int(collided[0]), len(pts))
        raise DegenerateConfigurationError(f"bodies {pair.i} and {pair.j} coincide")
    return DistanceVector(n=len(pts), entries=arr.tolist())


def cayley_menger(r: DistanceLike, bodies: Optional[Iterable[int]] = None) -> float:
    """
    Bordered Cayley-Menger determinant of the selected bodies.

    The first row and column are (0, 1, ..., 1); the remaining block holds
    the squared mutual distances. Unit equilateral triangle: -3.
    """
    arr = as_distances(r)
    n = body_count(arr.size)
    chosen = tuple(range(1, n + 1)) if bodies is None else tuple(bodies)
    k = len(chosen)
    if k < 3:
        raise ArityError(f"Cayley-Menger determinant needs at least 3 bodies, got {k}")
    if any(b < 1 or b > n for b in chosen):
        raise PairIndexError(f"bodies {chosen} out of range for n={n}")

    idx = np.asarray(chosen) - 1
    sq = squareform(arr, checks=False)[np.ix_(idx, idx)] ** 2
    bordered = np.ones((k + 1, k + 1))
    bordered[0, 0] = 0.0
    bordered[1:, 1:] = sq
    return float(LA.det(bordered))


def volume_from_cm(value: float, k: int, atol: float = 0.0) -> float:
    """
    (k-1)-volume of the simplex whose k-point determinant is ``value``.

    Raises NonRealizableError when (-1)^k * value < -atol.
    """
    if k < 2:
        raise ArityError(f"simplex needs at least 2 vertices, got {k}")
    signed = (-1) ** k * value
    if signed < -atol:
        raise NonRealizableError(f"Cayley-Menger value {value:.6g} has the wrong sign for k={k}")
    return math.sqrt(max(signed, 0.0) / (2 ** (k - 1) * math.factorial(k - 1) ** 2))


def wedge(x: PositionLike, i: int, j: int, k: int) -> float:
    """(P_j - P_i) x (P_k - P_i)"""
    pts = as_positions(x)
    a, b, c = pts[i - 1], pts[j - 1], pts[k - 1]
    return float((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))


def oriented_area(x: PositionLike, triple: Tuple[int, int, int], slot: int = 1) -> OrientedArea:
    """Signed area (-1)^(slot+1) / 2 * wedge of the ordered triple."""
    if not 1 <= slot <= 4:
        raise ValueError(f"slot must be in 1..4, got {slot}")
    value = (-1) ** (slot + 1) * 0.5 * wedge(x, *triple)
    return OrientedArea(value=value, triple=tuple(triple), slot=slot)


def quadruple_areas(x: PositionLike, quad: Sequence[int]) -> Dict[int, OrientedArea]:
    """Areas Delta_b for each body b of an ascending quadruple (b removed, slot = position of b)."""
    ordered = tuple(sorted(quad))
    if len(ordered) != 4:
        raise ArityError(f"expected 4 bodies, got {len(ordered)}")
    areas = {}
    for slot, body in enumerate(ordered, start=1):
        rest = tuple(b for b in ordered if b != body)
        areas[body] = oriented_area(x, rest, slot)
    return areas


def cm_gradient_entry(
    r: DistanceLike, pair: PairIndex, areas: Tuple[OrientedArea, OrientedArea]
) -> float:
    """d F / d r_ij = -64 r_ij Delta_i Delta_j for a planar four-body determinant."""
    arr = as_distances(r)
    return -64.0 * arr[pair.linear] * areas[0].value * areas[1].value


def cm_gradient(x: PositionLike, quad: Sequence[int]) -> np.ndarray:
    """Packed gradient (over all n bodies of x) of the four-body determinant of ``quad``."""
    pts = as_positions(x)
    n = len(pts)
    arr = pdist(pts)
    areas = quadruple_areas(pts, quad)
    grad = np.zeros(pair_count(n))
    for a, b in combinations(sorted(quad), 2):
        pair = pair_index(a, b, n)
        grad[pair.linear] = cm_gradient_entry(arr, pair, (areas[a], areas[b]))
    return grad


def is_realizable(
    r: DistanceLike, slack: Optional[float] = None
) -> RealizabilityReport:
    """
    Triangle inequalities over every triple plus the sign of the full
    determinant; for five bodies also the strict G2 conditions on {1,3,4,5}.

    Slack is relative: scale**d for a polynomial of degree d in the distances.
    """
    slack = settings.realizability_slack if slack is None else slack
    arr = as_distances(r)
    n = body_count(arr.size)
    D = squareform(arr, checks=False)
    scale = float(np.max(arr))
    violations = []

    if np.any(arr <= 0):
        violations.append("non-positive distance")

    tol = slack * scale
    for i, j, k in combinations(range(n), 3):
        if (
            D[i, k] > D[i, j] + D[j, k] + tol
            or D[i, j] > D[i, k] + D[j, k] + tol
            or D[j, k] > D[i, j] + D[i, k] + tol
        ):
            violations.append(f"triangle ({i + 1},{j + 1},{k + 1})")

    if n >= 4 and not violations:
        value = cayley_menger(arr)
        if (-1) ** n * value < -slack * scale ** (2 * (n - 1)):
            violations.append(f"Cayley-Menger sign over all {n} bodies")

    g2_violations = []
    if n == 5:
        for i, j, k in combinations((0, 2, 3, 4), 3):
            for a, b, c in ((i, j, k), (i, k, j), (j, i, k)):
                if D[a, b] + D[b, c] - D[a, c] <= tol:
                    g2_violations.append(f"strict triangle ({a + 1},{b + 1},{c + 1})")
        if cayley_menger(arr, (1, 3, 4, 5)) < -slack * scale**6:
            g2_violations.append("Cayley-Menger sign of (1,3,4,5)")

    return RealizabilityReport(
        realizable=not violations,
        in_g2=n == 5 and not violations and not g2_violations,
        violations=violations,
        g2_violations=g2_violations,
    )


def area_identity_residual(x: PositionLike) -> float:
    """
    Three-term relation between wedges sharing body 1:
    w(1;2,5) w(1;3,4) - w(1;2,4) w(1;3,5) + w(1;4,5) w(1;2,3).
    """
    return (
        wedge(x, 1, 2, 5) * wedge(x, 1, 3, 4)
        - wedge(x, 1, 2, 4) * wedge(x, 1, 3, 5)
        + wedge(x, 1, 4, 5) * wedge(x, 1, 2, 3)
    )


def sine_identity_residual(alpha: float, beta: float, gamma: float) -> float:
    return (
        math.sin(alpha + beta + gamma) * math.sin(beta)
        - math.sin(alpha + beta) * math.sin(beta + gamma)
        + math.sin(gamma) * math.sin(alpha)
    )

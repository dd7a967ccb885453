"""
Potential, moment of inertia and the per-pair Lagrangian terms
S_ij = m_i m_j r_ij (delta - r_ij^-3) and R_ij = m_i m_j (delta + 2 r_ij^-3).
"""

from typing import Sequence, Union

import numpy as np

from ccdist.errors import SingularityError
from ccdist.models import MassVector
from ccdist.services.distgeo import DistanceLike, PositionLike, as_distances, as_positions

MassLike = Union[MassVector, np.ndarray, Sequence[float]]


def as_masses(m: MassLike) -> np.ndarray:
    if isinstance(m, MassVector):
        return m.array
    return np.asarray(m, dtype=float).ravel()


def inertia_target(m: MassLike) -> float:
    return 1.0 / (2.0 * float(np.sum(as_masses(m))))


def pair_products(m: MassLike) -> np.ndarray:
    """m_i m_j in packed pair order."""
    masses = as_masses(m)
    iu = np.triu_indices(masses.size, k=1)
    return np.outer(masses, masses)[iu]


def _checked(r: DistanceLike, m: MassLike):
    arr = as_distances(r)
    w = pair_products(m)
    if arr.size != w.size:
        raise ValueError(f"{arr.size} distances do not match {as_masses(m).size} masses")
    return arr, w


def potential(r: DistanceLike, m: MassLike) -> float:
    """U = sum m_i m_j / r_ij"""
    arr, w = _checked(r, m)
    if np.any(arr <= 0):
        raise SingularityError("potential is singular at a zero mutual distance")
    return float(np.sum(w / arr))


def inertia(r: DistanceLike, m: MassLike) -> float:
    """I = (1 / 2m) sum m_i m_j r_ij^2"""
    arr, w = _checked(r, m)
    return float(np.sum(w * arr**2) / (2.0 * np.sum(as_masses(m))))


def inertia_positions(x: PositionLike, m: MassLike) -> float:
    """Half the mass-weighted squared distance to the center of mass."""
    pts = as_positions(x)
    masses = as_masses(m)
    center = masses @ pts / masses.sum()
    return float(0.5 * np.sum(masses * np.sum((pts - center) ** 2, axis=1)))


def potential_gradient(r: DistanceLike, m: MassLike) -> np.ndarray:
    arr, w = _checked(r, m)
    return -w / arr**2


def inertia_gradient(r: DistanceLike, m: MassLike) -> np.ndarray:
    arr, w = _checked(r, m)
    return w * arr / np.sum(as_masses(m))


def s_entry(r_ij: float, m_i: float, m_j: float, delta: float) -> float:
    return m_i * m_j * r_ij * (delta - r_ij**-3)


def r_entry(r_ij: float, m_i: float, m_j: float, delta: float) -> float:
    return m_i * m_j * (delta + 2.0 * r_ij**-3)


def s_vector(r: DistanceLike, m: MassLike, delta: float) -> np.ndarray:
    """Gradient of U + m delta I with respect to the distances."""
    arr, w = _checked(r, m)
    return w * arr * (delta - arr**-3)


def r_vector(r: DistanceLike, m: MassLike, delta: float) -> np.ndarray:
    """Diagonal Hessian of U + m delta I with respect to the distances."""
    arr, w = _checked(r, m)
    return w * (delta + 2.0 * arr**-3)


def lagrangian(r: DistanceLike, m: MassLike, delta: float) -> float:
    """U + lambda (I - I0) with lambda = m delta."""
    masses = as_masses(m)
    total = float(masses.sum())
    return potential(r, masses) + total * delta * (inertia(r, masses) - inertia_target(masses))

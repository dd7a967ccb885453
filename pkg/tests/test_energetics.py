import numpy as np
import pytest
from scipy.spatial.distance import pdist

from ccdist.errors import SingularityError
from ccdist.models import MassVector
from ccdist.services.energetics import (
    inertia,
    inertia_gradient,
    inertia_positions,
    inertia_target,
    lagrangian,
    pair_products,
    potential,
    potential_gradient,
    r_entry,
    r_vector,
    s_entry,
    s_vector,
)
from ccdist.services.finite_diff import central_gradient, central_hessian


def test_equilateral_potential_and_inertia():
    m = MassVector(masses=[1.0, 1.0, 1.0])
    r = [1.0, 1.0, 1.0]
    assert potential(r, m) == pytest.approx(3.0)
    assert inertia(r, m) == pytest.approx(0.5)
    assert inertia_target(m) == pytest.approx(1 / 6)
    assert m.inertia_target == pytest.approx(1 / 6)


def test_potential_is_singular_at_zero_distance():
    with pytest.raises(SingularityError):
        potential([1.0, 0.0, 1.0], [1.0, 1.0, 1.0])


def test_pair_products_follow_packed_order():
    np.testing.assert_array_equal(pair_products([1.0, 2.0, 3.0]), [2.0, 3.0, 6.0])


def test_mismatched_lengths_are_rejected():
    with pytest.raises(ValueError):
        potential([1.0, 1.0, 1.0], [1.0, 1.0, 1.0, 1.0])


def test_inertia_agrees_with_positions(random_points):
    masses = np.array([1.0, 2.0, 0.5, 1.5, 3.0])
    assert inertia(pdist(random_points), masses) == pytest.approx(
        inertia_positions(random_points, masses), rel=1e-12
    )


def test_gradients_match_finite_differences(random_points):
    masses = np.array([1.0, 2.0, 0.5, 1.5, 3.0])
    r = pdist(random_points)
    numeric_u = central_gradient(lambda z: potential(z, masses), r)
    numeric_i = central_gradient(lambda z: inertia(z, masses), r)
    np.testing.assert_allclose(potential_gradient(r, masses), numeric_u, rtol=1e-6)
    np.testing.assert_allclose(inertia_gradient(r, masses), numeric_i, rtol=1e-6)


def test_s_and_r_vectors_are_lagrangian_derivatives(random_points):
    masses = np.array([1.0, 2.0, 0.5, 1.5, 3.0])
    delta = 0.7
    r = pdist(random_points)

    def f(z):
        return lagrangian(z, masses, delta)

    S = s_vector(r, masses, delta)
    np.testing.assert_allclose(central_gradient(f, r), S, rtol=1e-6, atol=1e-8)
    hessian = central_hessian(f, r)
    scale = np.max(np.abs(r_vector(r, masses, delta)))
    np.testing.assert_allclose(hessian, np.diag(r_vector(r, masses, delta)), atol=1e-4 * scale)

    assert s_entry(r[0], masses[0], masses[1], delta) == pytest.approx(S[0])
    assert r_entry(r[0], masses[0], masses[1], delta) == pytest.approx(
        r_vector(r, masses, delta)[0]
    )


def test_s_entry_vanishes_at_delta():
    # S_ij = 0 exactly when delta = r_ij^-3
    assert s_entry(2.0, 1.0, 3.0, 2.0**-3) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("s", [0.5, 2.0, 3.7])
def test_potential_and_inertia_homogeneity(random_points, s):
    masses = np.array([1.0, 2.0, 0.5, 1.5, 3.0])
    r = pdist(random_points)
    assert potential(s * r, masses) == pytest.approx(potential(r, masses) / s, rel=1e-13)
    assert inertia(s * r, masses) == pytest.approx(s**2 * inertia(r, masses), rel=1e-13)

import math

import numpy as np
import pytest
from scipy.spatial.distance import pdist

from ccdist.errors import (
    ArityError,
    DegenerateConfigurationError,
    NonRealizableError,
    PairIndexError,
)
from ccdist.services.distgeo import (
    area_identity_residual,
    body_count,
    cayley_menger,
    cm_gradient,
    distances_from_positions,
    is_realizable,
    oriented_area,
    pair_count,
    pair_from_linear,
    pair_index,
    pair_label,
    pairs,
    quadruple_areas,
    sine_identity_residual,
    volume_from_cm,
    wedge,
)
from ccdist.services.finite_diff import central_gradient


def test_pair_index_endpoints():
    assert pair_index(1, 2, 5).linear == 0
    assert pair_index(4, 5, 5).linear == 9
    assert pair_index(2, 3, 5).linear == 4
    assert pair_count(5) == 10


def test_pair_index_matches_pdist_order():
    for n in (3, 4, 6, 12):
        for slot, (i, j) in enumerate(pairs(n)):
            assert pair_index(i, j, n).linear == slot
            assert pair_from_linear(slot, n) == pair_index(i, j, n)


@pytest.mark.parametrize("i,j,n", [(3, 3, 5), (4, 2, 5), (0, 2, 5), (1, 6, 5)])
def test_pair_index_rejects_invalid_pairs(i, j, n):
    with pytest.raises(PairIndexError):
        pair_index(i, j, n)


def test_pair_labels():
    assert pair_label(1, 2, 5) == "r_12"
    assert pair_label(3, 11, 12) == "r_3_11"


def test_body_count_inverts_pair_count():
    assert body_count(10) == 5
    with pytest.raises(ValueError):
        body_count(7)


def test_cayley_menger_unit_triangle():
    assert cayley_menger([1.0, 1.0, 1.0]) == pytest.approx(-3.0, abs=1e-12)
    assert volume_from_cm(-3.0, 3) == pytest.approx(math.sqrt(3) / 4, rel=1e-12)


def test_cayley_menger_unit_square_is_planar():
    r = [1.0, math.sqrt(2), 1.0, 1.0, math.sqrt(2), 1.0]
    assert abs(cayley_menger(r)) < 1e-12


def test_cayley_menger_regular_tetrahedron_volume():
    value = cayley_menger([1.0] * 6)
    assert value == pytest.approx(4.0, rel=1e-12)
    assert volume_from_cm(value, 4) == pytest.approx(1 / (6 * math.sqrt(2)), rel=1e-12)


def test_cayley_menger_needs_three_bodies():
    with pytest.raises(ArityError):
        cayley_menger([1.0] * 10, (1, 2))


def test_volume_rejects_wrong_sign():
    with pytest.raises(NonRealizableError):
        volume_from_cm(3.0, 3)


def test_coincident_bodies_are_degenerate():
    with pytest.raises(DegenerateConfigurationError, match="bodies 2 and 3"):
        distances_from_positions([[0, 0], [1, 0], [1, 0]])


def test_oriented_area_signs():
    pts = [[0, 0], [1, 0], [0, 1]]
    assert wedge(pts, 1, 2, 3) == pytest.approx(1.0)
    assert oriented_area(pts, (1, 2, 3), slot=1).value == pytest.approx(0.5)
    assert oriented_area(pts, (1, 2, 3), slot=2).value == pytest.approx(-0.5)
    with pytest.raises(ValueError):
        oriented_area(pts, (1, 2, 3), slot=5)


def test_quadruple_areas_sum_to_zero(random_points):
    # slot signs make the four areas of a planar quadruple sum to zero
    areas = quadruple_areas(random_points, (1, 2, 3, 4))
    assert abs(sum(a.value for a in areas.values())) < 1e-12


def test_cm_gradient_matches_finite_differences(random_points):
    # determinants as functions of all ten distances, at a planar point set
    r = pdist(random_points)
    for quad in ((1, 2, 3, 4), (1, 2, 3, 5), (1, 3, 4, 5)):
        analytic = cm_gradient(random_points, quad)
        numeric = central_gradient(lambda z, q=quad: cayley_menger(z, q), r)
        scale = np.max(np.abs(analytic))
        np.testing.assert_allclose(numeric, analytic, rtol=0, atol=1e-6 * scale)


def test_realizability_of_planar_points(random_points):
    report = is_realizable(pdist(random_points))
    assert report.realizable
    assert report.in_g2


def test_triangle_violation_is_reported():
    r = [1.0, 3.0, 1.0]
    report = is_realizable(r)
    assert not report.realizable
    assert report.violations == ["triangle (1,2,3)"]


def test_collinear_triple_is_outside_g2():
    pts = [[0, 0], [1, 0], [2, 0], [3, 0], [0, 1]]
    report = is_realizable(pdist(pts))
    assert report.realizable
    assert not report.in_g2


def test_area_identity(random_points):
    assert abs(area_identity_residual(random_points)) < 1e-12


def test_sine_identity():
    rng = np.random.default_rng(3)
    for alpha, beta, gamma in rng.uniform(0, 2 * np.pi, size=(50, 3)):
        assert abs(sine_identity_residual(alpha, beta, gamma)) < 1e-12

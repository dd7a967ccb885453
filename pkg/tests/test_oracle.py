import numpy as np
import pytest
from scipy.spatial.distance import pdist

from ccdist.errors import PreconditionError, ReconstructionError
from ccdist.services.collinear import moulton_enumerate, solve_ordering
from ccdist.services.energetics import inertia_positions, inertia_target
from ccdist.services.oracle import (
    FUZZ_CHECKS,
    brute_force_minimum,
    euler_quintic_coefficients,
    euler_quintic_residual,
    euler_ratio,
    identity_fuzzer,
    normalize_configuration,
    oracle_solver,
    position_residuals,
    reconstruct_positions,
)


def test_equilateral_residual_vanishes(equilateral):
    residual = position_residuals(equilateral, [1.0, 2.0, 3.0], 1.0)
    assert np.max(np.abs(residual)) < 1e-14


def test_normalize_configuration(random_points):
    masses = np.array([1.0, 2.0, 0.5, 1.5, 3.0])
    pts = normalize_configuration(random_points, masses)
    np.testing.assert_allclose(masses @ pts, 0.0, atol=1e-14)
    assert pts[2, 1] == pytest.approx(pts[0, 1], abs=1e-14)
    assert pts[2, 0] > pts[0, 0]
    assert inertia_positions(pts, masses) == pytest.approx(inertia_target(masses), rel=1e-12)


def test_lagrange_triangle_from_perturbed_guess(equilateral):
    masses = [1.0, 2.0, 3.0]
    guess = equilateral + np.array([[0.02, -0.01], [0.0, 0.03], [-0.01, 0.0]])
    solution = oracle_solver.solve_positions(masses, guess)
    r = pdist(solution.x.array)
    np.testing.assert_allclose(r, r[0], rtol=1e-10)
    assert solution.lambda_ == pytest.approx(sum(masses) * solution.delta)
    assert solution.delta == pytest.approx(r[0] ** -3, rel=1e-10)


def test_pentagon_gauge_independence(pentagon):
    masses = np.ones(5)
    a = oracle_solver.solve_positions(masses, pentagon, pinned=(1, 3))
    b = oracle_solver.solve_positions(masses, pentagon, pinned=(2, 4))
    np.testing.assert_allclose(np.sort(pdist(a.x.array)), np.sort(pdist(b.x.array)), rtol=1e-10)
    assert a.delta == pytest.approx(b.delta, rel=1e-10)
    assert b.pinned == (2, 4)


def test_reconstruct_positions(random_points):
    r = pdist(random_points)
    pts = reconstruct_positions(r).array
    np.testing.assert_allclose(pdist(pts), r, rtol=1e-10)
    np.testing.assert_allclose(pts[0], 0.0)
    assert pts[2, 1] == 0.0 and pts[2, 0] > 0


def test_reconstruct_rejects_spatial_distances():
    with pytest.raises(ReconstructionError):
        reconstruct_positions([1.0] * 6)


def test_euler_quintic_equal_masses():
    assert euler_quintic_residual(1.0, 1.0, 1.0, 1.0) == 0.0
    assert euler_ratio(1.0, 1.0, 1.0) == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_array_equal(euler_quintic_coefficients(1.0, 1.0, 1.0), [2, 5, 4, -4, -5, -2])


@pytest.mark.parametrize("rho", [0.0, -0.5])
def test_euler_quintic_needs_positive_ratio(rho):
    with pytest.raises(PreconditionError):
        euler_quintic_residual(1.0, 2.0, 3.0, rho)


def test_euler_ratio_matches_collinear_solver():
    rng = np.random.default_rng(21)
    for m1, m2, m3 in rng.uniform(0.1, 10.0, size=(10, 3)):
        solution = solve_ordering([m1, m2, m3], (1, 2, 3))
        rho = solution.gaps[1] / solution.gaps[0]
        assert euler_ratio(m1, m2, m3) == pytest.approx(rho, rel=1e-10)


def test_identity_fuzzer_passes():
    report = identity_fuzzer(seed=0, trials=100)
    assert report.passed, report.failures
    assert report.checks == list(FUZZ_CHECKS)
    assert all(v >= 0 for v in report.max_errors.values())


def test_identity_fuzzer_is_deterministic():
    a = identity_fuzzer(seed=7, trials=20)
    b = identity_fuzzer(seed=7, trials=20)
    assert a.max_errors == b.max_errors


def test_brute_force_minimum_agrees_with_newton():
    rng = np.random.default_rng(2)
    for masses in [np.ones(3)] + list(rng.uniform(0.2, 5.0, size=(5, 3))):
        report = brute_force_minimum(masses)
        assert report.within_one_cell, report
        assert report.endpoint_ratio > 10.0
        assert report.arc[0] < report.phi_grid < report.arc[1]


def test_collinear_solutions_cross_validate():
    masses = [1.0, 2.0, 3.0, 4.0]
    for ordering, solution in moulton_enumerate(masses):
        report = oracle_solver.cross_validate(solution.distances, masses)
        assert report.passed, (ordering.perm, report.max_relative_error)
        assert report.max_relative_error < 1e-10

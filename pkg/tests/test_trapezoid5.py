import numpy as np
import pytest
import scipy.linalg as LA
from scipy.spatial.distance import pdist

from ccdist.errors import (
    ClassificationError,
    CollinearDegeneracyError,
    InvalidRegionError,
    NonConvergenceError,
    PreconditionError,
    SingularSystemError,
)
from ccdist.models import DistanceVector, MultiplierSet, TrapezoidGuess, TrapezoidSolution
from ccdist.services.energetics import inertia, inertia_target
from ccdist.services.finite_diff import central_gradient, central_hessian
from ccdist.services.oracle import oracle_solver
from ccdist.services.trapezoid5 import (
    R12,
    R13,
    R24,
    R25,
    R45,
    classify,
    cluster_vectors,
    eta_multipliers,
    hessian_w245,
    initial_guess_symmetric,
    jacobian_system,
    lagrangian_w245,
    residual_scales,
    residual_system,
    spectrum_closed_form,
    symmetric_family_member,
    symmetry_analysis,
    trapezoid_positions,
    trapezoid_solver,
)

MULTIPLIERS = MultiplierSet(delta=0.3, omega=0.2, theta=0.1)


def _synthetic(rho, offset=0.0, h=1.5):
    r = pdist(trapezoid_positions(rho, h, offset))
    return TrapezoidSolution(
        r=DistanceVector.from_array(r), multipliers=MULTIPLIERS, residual_norm=0.0
    )


def test_family_member_masses(family_member):
    m = family_member.masses.masses
    assert m[0] == m[2] == 1.0
    assert m[3] == m[4]
    assert all(v > 0 for v in m)
    assert family_member.height == pytest.approx(2.1341, abs=1e-4)
    assert m[1] == pytest.approx(0.4479, abs=1e-4)
    assert m[3] == pytest.approx(6.6239, abs=1e-4)
    assert family_member.height > np.sqrt(3) * family_member.base_ratio


@pytest.mark.parametrize("b", [0.5, 2.0, -1.0])
def test_family_member_outside_window(b):
    with pytest.raises(PreconditionError):
        symmetric_family_member(b)


def test_initial_guess_is_normalized():
    masses = [1.0, 2.0, 1.0, 3.0, 3.0]
    guess = initial_guess_symmetric(masses, 1.2, 2.0, 0.1)
    assert inertia(guess.r, masses) == pytest.approx(inertia_target(masses), rel=1e-12)
    assert guess.delta == pytest.approx(guess.r[R24] ** -3)


def test_initial_guess_rejects_p2_outside_segment():
    with pytest.raises(PreconditionError):
        initial_guess_symmetric([1.0] * 5, 1.2, 2.0, offset=1.0)


def test_jacobian_matches_finite_differences():
    masses = np.array([1.0, 0.5, 1.5, 2.0, 1.0])
    r = pdist(trapezoid_positions(1.2, 1.8, 0.1))
    z = np.concatenate([r, [0.3, 0.2, 0.1]])

    def row(k):
        def f(w):
            multipliers = MultiplierSet(delta=w[10], omega=w[11], theta=w[12])
            return residual_system(w[:10], multipliers, masses)[k]

        return f

    numeric = np.array([central_gradient(row(k), z) for k in range(13)])
    np.testing.assert_allclose(numeric, jacobian_system(r, MULTIPLIERS, masses), atol=1e-6)


def test_hessian_and_closed_form_spectrum():
    masses = np.array([1.0, 0.5, 1.5, 2.0, 1.0])
    r = pdist(trapezoid_positions(1.2, 1.8, 0.1))
    d, w = 0.3, 0.2
    hessian = hessian_w245(r, d, w, masses)
    numeric = central_hessian(lambda z: lagrangian_w245(z, masses, d, w, 0.1), r)
    np.testing.assert_allclose(numeric, hessian, atol=1e-4 * np.max(np.abs(hessian)))

    closed = spectrum_closed_form(r, d, w, masses)
    np.testing.assert_allclose(np.sort(closed), LA.eigvalsh(hessian), rtol=1e-12, atol=1e-12)
    assert closed[-2] >= closed[-1]


def test_family_solution_converges(family_solution, family_member):
    sol = family_solution
    assert sol.residual_norm < 1e-12
    residual = residual_system(sol.r, sol.multipliers, family_member.masses)
    scales = residual_scales(sol.r, sol.multipliers, family_member.masses)
    assert np.max(np.abs(residual) / scales) < 1e-12
    assert sol.constraints.in_t


def test_family_solution_classification(family_solution):
    flags = family_solution.flags
    assert flags.passed, flags.violations
    d = family_solution.multipliers.delta
    r = family_solution.r.array
    assert r[R24] == pytest.approx(r[R25], rel=1e-9)
    assert r[R24] == pytest.approx(d ** (-1 / 3), rel=1e-9)
    assert min(family_solution.spectrum) > 0


def test_family_solution_is_symmetric(family_solution):
    verdict = family_solution.symmetry
    assert verdict.symmetry_class == "symmetric_isosceles"
    assert all(abs(v) < 1e-8 for v in verdict.distance_defects.values())


def test_family_solution_cross_validates(family_solution, family_member):
    report = oracle_solver.cross_validate(family_solution.r, family_member.masses)
    assert report.passed
    assert report.max_relative_error < 1e-8


@pytest.mark.parametrize("s", [0.5, 3.0])
def test_family_solution_scales_with_inertia_target(family_solution, family_member, s):
    masses = family_member.masses
    target = s**2 * inertia_target(masses)
    guess = initial_guess_symmetric(masses, 1.2, family_member.height, target=target)
    scaled = trapezoid_solver.newton_solve(masses, guess, target=target)
    base = family_solution.multipliers
    np.testing.assert_allclose(scaled.r.array, s * family_solution.r.array, rtol=1e-12)
    # delta and omega scale as r^-3, theta as r^-2
    assert scaled.multipliers.delta == pytest.approx(base.delta / s**3, rel=1e-10)
    assert scaled.multipliers.omega == pytest.approx(base.omega / s**3, rel=1e-10)
    assert scaled.multipliers.theta == pytest.approx(base.theta / s**2, rel=1e-10)
    assert scaled.constraints.in_t


def test_eta_multipliers_need_noncollinear_triples(family_member):
    # P1, P2, P3 collinear: the area of triangle (1,2,3) vanishes
    with pytest.raises(CollinearDegeneracyError):
        eta_multipliers(family_member.positions, family_member.masses, 1.0)


def test_equal_masses_have_no_realizable_trapezoid():
    masses = [1.0] * 5
    guess = initial_guess_symmetric(masses, 1.2, 2.0)
    with pytest.raises((InvalidRegionError, NonConvergenceError, SingularSystemError)):
        trapezoid_solver.newton_solve(masses, guess)


def test_newton_rejects_bad_guess():
    guess = TrapezoidGuess(r=[1.0] * 9 + [-1.0], delta=1.0)
    with pytest.raises(PreconditionError):
        trapezoid_solver.newton_solve([1.0] * 5, guess)


def test_classify_strict_reports_violations(family_solution, family_member):
    tampered = family_solution.model_copy(
        update={
            "multipliers": family_solution.multipliers.model_copy(update={"omega": -1.0})
        }
    )
    flags = classify(tampered, family_member.masses)
    assert not flags.omega_positive
    assert "omega > 0" in flags.violations
    with pytest.raises(ClassificationError) as excinfo:
        classify(tampered, family_member.masses, strict=True)
    assert "omega > 0" in excinfo.value.violations


def test_symmetry_rectangle():
    verdict = symmetry_analysis(_synthetic(1.0), [1.0, 1.0, 1.0, 1.0, 1.0])
    assert verdict.symmetry_class == "rectangle"


def test_symmetry_wide_top_requires_mirror_equal_masses():
    sol = _synthetic(1.4)
    assert symmetry_analysis(sol, [1.0, 2.0, 1.0, 3.0, 3.0]).symmetry_class == (
        "symmetric_isosceles"
    )
    assert symmetry_analysis(sol, [1.0, 2.0, 1.5, 3.0, 3.0]).symmetry_class == "violation"
    assert symmetry_analysis(_synthetic(1.4, offset=0.2), [1.0] * 5).symmetry_class == (
        "violation"
    )


def test_symmetry_narrow_top_is_one_sided():
    sol = _synthetic(0.6, offset=-0.2)
    assert sol.r.array[R13] > sol.r.array[R45]
    assert sol.r.array[R12] < sol.r.array[R13] / 2
    verdict = symmetry_analysis(sol, [1.0, 1.0, 2.0, 2.0, 1.0])
    assert verdict.symmetry_class == "asymmetric_r13_gt_r45"
    assert symmetry_analysis(sol, [2.0, 1.0, 1.0, 1.0, 2.0]).symmetry_class == "violation"


def test_symmetry_relabels_mirror_image():
    pts = trapezoid_positions(0.6, 1.5)
    pts[3:, 0] += 0.2
    sol = _synthetic(0.6).model_copy(update={"r": DistanceVector.from_array(pdist(pts))})
    verdict = symmetry_analysis(sol, [2.0, 1.0, 1.0, 1.0, 2.0])
    assert verdict.mirrored
    assert verdict.symmetry_class == "asymmetric_r13_gt_r45"
    assert verdict.notes


@pytest.mark.parametrize("scale", [0.98, 1.0, 1.02])
def test_eta_multipliers_at_pentagons(pentagon, scale):
    masses = np.ones(5)
    masses[0] *= scale
    masses[3] /= scale
    oracle = oracle_solver.solve_positions(masses, pentagon)
    report = eta_multipliers(oracle.x, masses, oracle.delta)
    assert report.passed, report.max_residual
    assert set(report.eta) == {"eta3", "eta4", "eta5"}


def test_eta_multipliers_off_central_configuration(pentagon):
    masses = np.ones(5)
    oracle = oracle_solver.solve_positions(masses, pentagon)
    pts = oracle.x.array.copy()
    pts[0] += 0.1 * np.max(pdist(pts)) * np.array([1.0, 0.5])
    report = eta_multipliers(pts, masses, oracle.delta)
    assert not report.passed
    assert report.max_residual > 1e-3


def test_cluster_vectors_groups_nearby_points():
    base = np.arange(1.0, 11.0)
    clusters = cluster_vectors([base, base + 1e-9, base + 1.0], tol=1e-6)
    assert [c.size for c in clusters] == [2, 1]
    assert cluster_vectors([], tol=1e-6) == []


def test_uniqueness_probe_around_family(family_member):
    report = trapezoid_solver.uniqueness_probe(
        family_member.masses,
        starts=6,
        seed=0,
        rho_range=(1.15, 1.25),
        height_range=(2.05, 2.25),
        offset=0.02,
    )
    assert report.cluster_count == 1
    assert report.clusters[0].size >= 1
    solution = report.clusters[0].representative
    assert solution[R45] > solution[R13]
    assert solution[R12] == pytest.approx(solution[R13] / 2, rel=1e-6)


def test_uniqueness_probe_needs_two_starts(family_member):
    with pytest.raises(PreconditionError):
        trapezoid_solver.uniqueness_probe(family_member.masses, starts=1)


def test_uniqueness_probe_default_box(family_member, family_solution):
    report = trapezoid_solver.uniqueness_probe(family_member.masses, starts=100)
    assert report.starts == 100
    assert report.cluster_count == 1, report.message
    np.testing.assert_allclose(
        report.clusters[0].representative, family_solution.r.array, rtol=1e-8
    )

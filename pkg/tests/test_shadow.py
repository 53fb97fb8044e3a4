import math

import numpy as np
import pytest

import shadowlab as sl
from shadowlab.errors import NonhyperbolicMonodromyError, SingularJacobianError

from conftest import random_hyperbolic_matrix

GOLDEN = (3.0 + math.sqrt(5.0)) / 2.0
PHI = (1.0 + math.sqrt(5.0)) / 2.0


# ---------------------------------------------------------------------------
# closed-form linear solve


def test_closed_form_zero_gaps():
    z = sl.closed_form_linear_shadow([[2.0, 1.0], [1.0, 1.0]], np.zeros((6, 2)))
    assert np.allclose(z, 0.0, atol=1e-14)


def test_closed_form_scalar_q1():
    z = sl.closed_form_linear_shadow([[2.0]], [[1.0]])
    assert z[0, 0] == pytest.approx(-1.0, rel=1e-14)


def test_closed_form_self_substitution_cat():
    a = np.array([[2.0, 1.0], [1.0, 1.0]])
    gaps = np.array([[1e-3, 0.0], [0.0, 0.0]])
    z = sl.closed_form_linear_shadow(a, gaps)
    for i in range(2):
        residual = z[(i + 1) % 2] - a @ z[i] - gaps[i]
        assert np.linalg.norm(residual) < 1e-12


def test_closed_form_self_substitution_random():
    rng = np.random.default_rng(99)
    for _ in range(25):
        n = int(rng.integers(1, 5))
        q = int(rng.integers(1, 20))
        a = random_hyperbolic_matrix(rng, n)
        gaps = rng.normal(scale=1e-3, size=(q, n))
        z = sl.closed_form_linear_shadow(a, gaps)
        scale = max(1.0, np.max(np.abs(z)))
        for i in range(q):
            residual = z[(i + 1) % q] - a @ z[i] - gaps[i]
            assert np.linalg.norm(residual) < 1e-10 * scale


def test_closed_form_rejects_nonhyperbolic():
    with pytest.raises(NonhyperbolicMonodromyError):
        sl.closed_form_linear_shadow([[1.0, 1.0], [0.0, 1.0]], np.zeros((3, 2)))


def test_closed_form_survives_monodromy_overflow():
    # 2^2000 overflows float, but the periodic solve itself is well posed
    a = np.diag([2.0, 0.5])
    gaps = np.zeros((2000, 2))
    gaps[0] = [1e-3, 1e-3]
    z = sl.closed_form_linear_shadow(a, gaps)
    for i in (0, 1, 2, 1999):
        residual = z[(i + 1) % 2000] - a @ z[i] - gaps[i]
        assert np.linalg.norm(residual) < 1e-12


# ---------------------------------------------------------------------------
# theoretical bound


def test_bound_scalar_cases():
    assert sl.theoretical_linear_lipschitz_bound([[2.0]], 4) == pytest.approx(1.0)
    assert sl.theoretical_linear_lipschitz_bound([[0.5]], 4) == pytest.approx(2.0)


def test_bound_cat_q8_brute_force():
    a = np.array([[2.0, 1.0], [1.0, 1.0]])
    got = sl.theoretical_linear_lipschitz_bound(a, 8)
    roots = [np.exp(2j * np.pi * k / 8) for k in range(8)]
    brute = max(
        1.0 / np.linalg.svd(w * np.eye(2) - a, compute_uv=False)[-1] for w in roots
    )
    assert got == pytest.approx(brute, rel=1e-12)
    assert got == pytest.approx(PHI, rel=1e-12)  # the worst root is omega = 1


# ---------------------------------------------------------------------------
# Newton shadow solver


def test_exact_orbit_returns_immediately(cat_sys):
    orbit = sl.toral_orbit_with_period(sl.cat_map(), 2)
    xi = sl.make_pseudotrajectory(cat_sys, orbit)
    sol = sl.find_periodic_shadow(cat_sys, xi)
    assert sol.iterations == 0
    assert sol.sup_distance == 0.0
    assert sol.converged and sol.ratio == 0.0
    assert sol.minimal_period == 2


def test_solver_matches_oracle_on_linear_systems():
    rng = np.random.default_rng(4242)
    for _ in range(30):
        n = int(rng.integers(1, 5))
        q = int(rng.integers(1, 33))
        a = random_hyperbolic_matrix(rng, n)
        lin = sl.linear_system(a)
        pts = rng.normal(scale=0.01, size=(q, n))
        xi = sl.make_pseudotrajectory(lin, pts)
        sol = sl.find_periodic_shadow(lin, xi)
        assert sol.converged
        gaps = np.stack([pts[(i + 1) % q] - a @ pts[i] for i in range(q)])
        oracle = pts - sl.closed_form_linear_shadow(a, gaps)
        assert np.max(np.abs(oracle - sol.orbit)) < 1e-9


def test_solver_ratio_below_linear_ceiling():
    rng = np.random.default_rng(7)
    a = random_hyperbolic_matrix(rng, 3)
    lin = sl.linear_system(a)
    for q in (1, 2, 5, 16, 32):
        pts = rng.normal(scale=1e-3, size=(q, 3))
        xi = sl.make_pseudotrajectory(lin, pts)
        sol = sl.find_periodic_shadow(lin, xi)
        ceiling = sl.theoretical_linear_lipschitz_bound(a, q)
        assert sol.ratio <= ceiling + 1e-9


def test_solver_cat_perturbed_fixed_point(cat_sys):
    d = 1e-4
    xi = sl.perturb_orbit(cat_sys, np.zeros((7, 2)), d, seed=3)
    sol = sl.find_periodic_shadow(cat_sys, xi)
    assert sol.converged
    assert sol.ratio <= sl.theoretical_linear_lipschitz_bound(cat_sys.linear_matrix, 7) + 1e-9
    assert sol.minimal_period == 1  # it found the fixed point


def test_solver_residual_contract(cat_sys):
    xi = sl.perturb_orbit(cat_sys, sl.toral_orbit_with_period(sl.cat_map(), 5), 1e-3, seed=0)
    sol = sl.find_periodic_shadow(cat_sys, xi)
    assert sol.converged
    assert sol.residual <= 1e-10
    q = sol.period
    for i in range(q):
        image = cat_sys.space.wrap(cat_sys.forward(sol.orbit[i]))
        assert cat_sys.space.dist(image, sol.orbit[(i + 1) % q]) <= sol.residual + 1e-15


def test_solver_deterministic(cat_sys):
    xi = sl.perturb_orbit(cat_sys, sl.toral_orbit_with_period(sl.cat_map(), 5), 1e-3, seed=1)
    a = sl.find_periodic_shadow(cat_sys, xi)
    b = sl.find_periodic_shadow(cat_sys, xi)
    assert np.array_equal(a.orbit, b.orbit)
    assert a.iterations == b.iterations


def test_solver_nonlinear_jordan(nonlinear_jordan2):
    # small perturbation of the fixed point on the nonlinear model with a
    # hyperbolic tail direction only: use the tail-only model to stay regular
    model = sl.jordan_model(block=None, tail=(2.0, 0.5), c=1.0, a_ball=0.5)
    sysm = model.system
    xi = sl.perturb_orbit(sysm, np.zeros((6, 2)), 1e-3, seed=5)
    sol = sl.find_periodic_shadow(sysm, xi)
    assert sol.converged
    assert sol.sup_distance <= 5e-3


def test_solver_singular_on_unit_block_witness(linear_jordan2):
    xi, _ = sl.witness_jordan(linear_jordan2, 1e-4, 10)
    with pytest.raises(SingularJacobianError):
        sl.find_periodic_shadow(linear_jordan2.system, xi)


# ---------------------------------------------------------------------------
# direct lower bound


def test_lower_bound_values(linear_jordan2):
    xi, _ = sl.witness_jordan(linear_jordan2, 1e-4, 50)
    lb = sl.direct_shadow_lower_bound(linear_jordan2, xi)
    assert lb == pytest.approx(5e-3, rel=1e-12)


@pytest.mark.parametrize("K", [10, 25, 50, 100])
@pytest.mark.parametrize("d", [1e-3, 1e-5])
def test_lower_bound_law(linear_jordan2, K, d):
    xi, _ = sl.witness_jordan(linear_jordan2, d, K)
    lb = sl.direct_shadow_lower_bound(linear_jordan2, xi)
    assert abs(lb / d - K) <= 1e-12 * K


def test_lower_bound_inapplicable_nonlinear(nonlinear_jordan2):
    xi, _ = sl.witness_jordan(nonlinear_jordan2, 1e-5, 10)
    with pytest.raises(sl.InapplicableError):
        sl.direct_shadow_lower_bound(nonlinear_jordan2, xi)


# ---------------------------------------------------------------------------
# expansivity-style periodicity check


def test_expansivity_fixed_point(cat_sys):
    assert sl.verify_periodicity_by_expansivity(cat_sys, [0.0, 0.0], 1, 0.3, 5)


def test_expansivity_rational_period2(cat_sys):
    # (1/5, 2/5) -> (4/5, 3/5) -> (1/5, 2/5)
    assert sl.verify_periodicity_by_expansivity(cat_sys, [0.2, 0.4], 2, 0.5, 6)


def test_expansivity_generic_point(cat_sys):
    assert not sl.verify_periodicity_by_expansivity(
        cat_sys, [0.123456789, 0.654321987], 3, 0.01, 8
    )


# ---------------------------------------------------------------------------
# scans


def test_scan_cat_bounded(cat_sys):
    base = sl.toral_orbit_with_period(sl.cat_map(), 8)
    family = sl.PerturbedOrbitFamily(cat_sys, base, seed=0)
    scan = sl.lipschitz_scan(cat_sys, family, [1e-3, 1e-4, 1e-5, 1e-6])
    assert all(r.converged for r in scan.rows)
    ceiling = sl.theoretical_linear_lipschitz_bound(cat_sys.linear_matrix, 8)
    assert all(r.ratio <= ceiling + 1e-9 for r in scan.rows)
    assert not scan.diverging
    assert scan.estimated_constant == max(r.ratio for r in scan.rows)


def test_scan_jordan_witness_diverges(linear_jordan2):
    family = sl.JordanWitnessFamily(linear_jordan2, 25)
    scan = sl.lipschitz_scan(linear_jordan2.system, family, [1e-3, 1e-4, 1e-5])
    assert scan.diverging
    for r in scan.rows:
        assert not r.converged
        assert r.error == "singular-jacobian"
        assert r.lower_bound == pytest.approx(25.0 * r.defect, rel=1e-9)


def test_scan_exact_orbit_family(cat_sys):
    orbit = sl.toral_orbit_with_period(sl.cat_map(), 2)
    family = sl.ExactOrbitFamily(cat_sys, orbit)
    scan = sl.lipschitz_scan(cat_sys, family, [1e-3, 1e-4, 1e-5])
    assert all(r.epsilon_star == 0.0 for r in scan.rows)
    assert scan.estimated_constant == 0.0
    assert not scan.diverging


def test_scan_validates_d_values(cat_sys):
    orbit = sl.toral_orbit_with_period(sl.cat_map(), 2)
    family = sl.ExactOrbitFamily(cat_sys, orbit)
    with pytest.raises(ValueError):
        sl.lipschitz_scan(cat_sys, family, [1e-3, 1e-4])
    with pytest.raises(ValueError):
        sl.lipschitz_scan(cat_sys, family, [1e-5, 1e-4, 1e-3])


def test_scan_csv_shape(cat_sys, tmp_path):
    base = sl.toral_orbit_with_period(sl.cat_map(), 5)
    family = sl.PerturbedOrbitFamily(cat_sys, base, seed=0)
    scan = sl.lipschitz_scan(cat_sys, family, [1e-3, 1e-4, 1e-5])
    path = tmp_path / "scan.csv"
    sl.write_scan_csv(scan, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "d,epsilon_star,ratio,converged,lower_bound"
    assert len(lines) == 4
    for line in lines[1:]:
        cells = line.split(",")
        assert len(cells) == 5
        assert cells[3] == "true"
        assert float(cells[0]) > 0
    table = sl.format_scan_table(scan)
    assert "estimated_constant" in table and "diverging" in table


# ---------------------------------------------------------------------------
# base orbits


def test_toral_orbit_with_period(cat_sys):
    for q in (2, 5, 8, 13):
        orbit = sl.toral_orbit_with_period(sl.cat_map(), q)
        assert orbit.shape == (q, 2)
        assert sl.defect(cat_sys, orbit) <= 1e-12
        # truly minimal: no proper divisor closes the orbit
        for div in range(1, q):
            if q % div == 0:
                assert cat_sys.space.dist(orbit[div % q], orbit[0]) > 1e-6 or div == q

"""Acceptance suite: one test per criterion, each printing a PASS line with
its runtime against the stated budget.

Run with:  pytest tests/test_acceptance.py -v -s
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

import shadowlab as sl
from shadowlab import _intmat, cli

from conftest import random_hyperbolic_matrix

GOLDEN = (3.0 + math.sqrt(5.0)) / 2.0
CAT_MATRIX = np.array([[2, 1], [1, 1]])

ORBIT_COUNTS = [1, 5, 16, 45, 121, 320, 841, 2205]  # |det(M^m - I)| for m = 1..8


def _report(name: str, elapsed: float, limit: float, detail: str = "") -> None:
    suffix = f" ({detail})" if detail else ""
    print(f"PASS {name}: {elapsed:.2f}s < {limit:.0f}s{suffix}")


@pytest.fixture(scope="module")
def cat():
    return sl.cat_map()


@pytest.fixture(scope="module")
def bounded_ratio_data(cat):
    """Criterion 2 workload, shared with criteria 5 and 7."""
    t0 = time.perf_counter()
    sys = cat.system
    results = {}
    for q in (5, 8, 13):
        base = sl.toral_orbit_with_period(cat, q)
        family = sl.PerturbedOrbitFamily(sys, base, seed=q)
        scan = sl.lipschitz_scan(sys, family, [1e-3, 1e-4, 1e-5, 1e-6])
        ceiling = sl.theoretical_linear_lipschitz_bound(CAT_MATRIX, q)
        results[q] = (scan, ceiling)
    elapsed = time.perf_counter() - t0
    estimated = max(scan.estimated_constant for scan, _ in results.values())
    certified = max(ceiling for _, ceiling in results.values())
    return {
        "results": results,
        "elapsed": elapsed,
        "estimated": estimated,
        "certified": certified,
    }


def test_criterion_1_linear_oracle_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(20260809)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 5))
        q = int(rng.integers(1, 33))
        matrix = random_hyperbolic_matrix(rng, n)
        lin = sl.linear_system(matrix)
        pts = rng.normal(scale=0.01, size=(q, n))
        xi = sl.make_pseudotrajectory(lin, pts)
        sol = sl.find_periodic_shadow(lin, xi)
        assert sol.converged
        gaps = np.stack([pts[(i + 1) % q] - matrix @ pts[i] for i in range(q)])
        oracle = pts - sl.closed_form_linear_shadow(matrix, gaps)
        worst = max(worst, float(np.max(np.abs(oracle - sol.orbit))))
    elapsed = time.perf_counter() - t0
    assert worst < 1e-9
    assert elapsed < 10.0
    _report("criterion 1 (linear oracle equivalence)", elapsed, 10, f"sup dev {worst:.2e}")


def test_criterion_2_bounded_ratio(bounded_ratio_data):
    elapsed = bounded_ratio_data["elapsed"]
    for q, (scan, ceiling) in bounded_ratio_data["results"].items():
        assert all(r.converged for r in scan.rows), f"Q={q}"
        assert all(r.ratio <= ceiling + 1e-9 for r in scan.rows), f"Q={q}"
        assert not scan.diverging, f"Q={q}"
    assert elapsed < 30.0
    _report(
        "criterion 2 (bounded ratio on the hyperbolic torus)",
        elapsed,
        30,
        f"estimated constant {bounded_ratio_data['estimated']:.3f} <= ceiling "
        f"{bounded_ratio_data['certified']:.3f}",
    )


def test_criterion_3_nonhyperbolic_witness(tmp_path):
    t0 = time.perf_counter()
    model = sl.jordan_model(block="real", size=2, eigenvalue=1, c=0.0)
    d = 1e-4
    for k_steps in (25, 50, 100):
        xi, _ = sl.witness_jordan(model, d, k_steps)
        bound = sl.direct_shadow_lower_bound(model, xi)
        assert abs(bound / d - k_steps) <= 1e-12
        l_test = k_steps / 25.0
        assert bound >= 25.0 * l_test * d * (1.0 - 1e-12)  # defeats L_test by factor 25
        scan = sl.lipschitz_scan(
            model.system, sl.JordanWitnessFamily(model, k_steps), [1e-4, 1e-5, 1e-6]
        )
        assert scan.diverging
    # exit-code contract through the CLI
    cfg = tmp_path / "scan.cfg"
    cfg.write_text(
        "[system]\nkind = jordan\nblock = real\nl = 2\neigenvalue = 1\nc = 0\n"
        "[command]\nname = scan\nfamily = jordan-witness\nK = 25\n"
        "d-values = 1e-4 1e-5 1e-6\n"
        f"[output]\ndirectory = {tmp_path}\n"
    )
    assert cli.run(str(cfg)) == 2
    elapsed = time.perf_counter() - t0
    assert elapsed < 10.0
    _report("criterion 3 (unit-block witness defeats any constant)", elapsed, 10)


def test_criterion_4_witness_structure(capsys):
    t0 = time.perf_counter()
    model = sl.jordan_model(block="real", size=2, eigenvalue=1, c=0.0)
    matrix = model.matrix
    d = 1e-6
    e1 = np.array([d, 0.0])
    for k_steps in range(1, 101):
        xi, meta = sl.witness_jordan(model, d, k_steps)
        assert meta.params["Z1"] == k_steps * (k_steps - 1) // 2
        assert meta.params["Z2"] == k_steps * k_steps
        assert meta.period == 2 * k_steps + k_steps * k_steps
        assert xi.points[k_steps][1] == k_steps * d  # second coordinate of y_K is K d
        assert np.array_equal(xi.points[0], np.zeros(2))
        # closure is bitwise: the final retirement step maps d*(1,0) to the origin
        y_q = matrix @ xi.points[-1] - e1
        assert np.array_equal(y_q, np.zeros(2))
    elapsed = time.perf_counter() - t0
    assert elapsed < 1.0
    _report("criterion 4 (witness structure constants)", elapsed, 1)


def test_criterion_5_expansion_certificates(cat, bounded_ratio_data):
    t0 = time.perf_counter()
    sys = cat.system
    # growth constant: the scanned estimate, floored at 1 (the certificate
    # bound is stated for constants >= 1 and only weakens as they grow)
    constant = max(1.0, bounded_ratio_data["estimated"])
    mat = _intmat.int_matrix(CAT_MATRIX)
    for m in range(1, 9):
        points = sl.enumerate_periodic_points_toral(CAT_MATRIX, m)
        power = _intmat.mat_power(mat, m)
        diff = _intmat.mat_sub(power, _intmat.identity(2))
        assert len(points) == ORBIT_COUNTS[m - 1] == abs(_intmat.det(diff))
        if m <= 4:  # independent brute-force rational scan
            q = abs(_intmat.det(diff))
            brute = set()
            for i in range(q):
                for j in range(q):
                    v0 = diff[0][0] * i + diff[0][1] * j
                    v1 = diff[1][0] * i + diff[1][1] * j
                    if v0 % q == 0 and v1 % q == 0:
                        brute.add((Fraction(i, q), Fraction(j, q)))
            exact = set(sl.enumerate_periodic_points_exact(CAT_MATRIX, m))
            assert exact == brute
        for p in points:
            record = sl.analyze_periodic_orbit(sys, p, m)
            cert = sl.expansion_certificate(sys, record, record.unstable_basis[:, 0])
            assert abs(cert.coefficients[m]) <= 1e-9
            assert sl.verify_growth_bound(cert, constant)
    elapsed = time.perf_counter() - t0
    assert elapsed < 60.0
    _report(
        "criterion 5 (expansion certificates over all enumerated orbits)",
        elapsed,
        60,
        f"growth constant {constant:.3f}",
    )


def test_criterion_6_pullback_witness_shadowing(cat):
    t0 = time.perf_counter()
    sys = cat.system
    d = 1e-5
    worst_defect = 0.0
    worst_return = 0.0
    for m in range(1, 7):
        for p in sl.enumerate_periodic_points_toral(CAT_MATRIX, m):
            record = sl.analyze_periodic_orbit(sys, p, m)
            xi, meta, cert = sl.witness_orbit_pullback(
                sys, p, m, record.unstable_basis[:, 0], d
            )
            worst_defect = max(worst_defect, xi.defect)
            sol = sl.find_periodic_shadow(sys, xi)
            assert sol.converged
            deviation = max(
                sys.space.dist(sol.orbit[i], record.points[i % m]) for i in range(xi.period)
            )
            worst_return = max(worst_return, deviation)
    elapsed = time.perf_counter() - t0
    assert worst_defect <= 4.0 * d
    assert worst_return <= 1e-8
    assert elapsed < 30.0
    _report(
        "criterion 6 (displacement witness shadowed by its own orbit)",
        elapsed,
        30,
        f"max defect {worst_defect:.2e} <= 4d, max return deviation {worst_return:.2e}",
    )


def test_criterion_7_splice_convergence(cat, bounded_ratio_data):
    t0 = time.perf_counter()
    sys = cat.system
    constant = bounded_ratio_data["certified"]  # the ceiling criterion 2 certifies
    p = sl.homoclinic_point(cat)
    defects = []
    returns = []
    for k in (2, 4, 8, 16):
        fwd = sl.orbit_segment(sys, p, 0, k - 1)
        bwd = sl.orbit_segment(sys, p, -k, -1)
        xi = sl.splice_cycle(sys, [fwd, bwd])
        defects.append(xi.defect)
        sol = sl.find_periodic_shadow(sys, xi)
        assert sol.converged and sol.residual <= 1e-10  # a genuine periodic orbit
        assert sol.sup_distance <= constant * xi.defect
        returns.append(sys.space.dist(sol.orbit_point, p))
        assert returns[-1] <= constant * xi.defect
    assert all(b < a for a, b in zip(defects, defects[1:]))  # d_m strictly decreasing
    assert all(b < a for a, b in zip(returns, returns[1:]))  # p_m -> p
    elapsed = time.perf_counter() - t0
    assert elapsed < 30.0
    _report(
        "criterion 7 (splice convergence to periodic orbits)",
        elapsed,
        30,
        f"defects {defects[0]:.1e} .. {defects[-1]:.1e}, p_m->p {returns[-1]:.1e}",
    )


def test_criterion_8_splitting_angle_uniformity(cat):
    t0 = time.perf_counter()
    sys = cat.system
    betas = []
    for m in range(1, 7):
        for p in sl.enumerate_periodic_points_toral(CAT_MATRIX, m):
            record = sl.analyze_periodic_orbit(sys, p, m)
            angle = sl.subspace_angle(record)
            betas.append(angle.minimum)
    betas = np.array(betas)
    spread = float(np.max(betas) - np.min(betas))
    assert spread <= 1e-8
    assert np.all(betas >= 0.1)
    elapsed = time.perf_counter() - t0
    assert elapsed < 10.0
    _report(
        "criterion 8 (splitting-angle uniformity)",
        elapsed,
        10,
        f"beta = {betas[0]:.9f} +- {spread:.1e} over {len(betas)} points",
    )

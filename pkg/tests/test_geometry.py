import math
import warnings

import numpy as np
import pytest

from depsim import (
    EnergyModel,
    ModelParams,
    OverlapPotential,
    asymptotic_minimal_energy,
    energy_gradient,
    energy_pairwise,
    minimal_energy,
    monte_carlo_union_volume,
    overlap_closed_2d,
    overlap_closed_3d,
    overlap_derivative,
    overlap_quadrature,
    rho_thresholds,
    three_body_2d,
    v_unit_ball,
)
from conftest import hex_cluster, random_admissible_spheres


def test_v_unit_ball():
    assert v_unit_ball(2) == pytest.approx(math.pi, rel=1e-14)
    assert v_unit_ball(3) == pytest.approx(4.0 * math.pi / 3.0, rel=1e-14)
    assert v_unit_ball(1) == pytest.approx(2.0, rel=1e-14)


def test_quadrature_tangent_and_full():
    assert overlap_quadrature(1.0, 2, 1.0) == 0.0
    assert overlap_quadrature(1.3, 3, 2.0) == 0.0
    # coincident centres recover the full ball volume
    assert overlap_quadrature(0.0, 3, 1.0) == pytest.approx(4.0 * math.pi / 3.0, abs=1e-12)
    assert overlap_quadrature(0.0, 2, 1.0) == pytest.approx(math.pi, abs=1e-12)


def test_quadrature_matches_closed_forms_on_grid():
    u = np.arange(0.0, 1.0 + 1e-9, 1e-3)
    for d, closed, r_dep in [(2, overlap_closed_2d, 1.0), (3, overlap_closed_3d, 1.0)]:
        quad = overlap_quadrature(u, d, r_dep)
        ref = closed(u, r_dep)
        assert np.max(np.abs(quad - ref)) <= 1e-10 * r_dep**d


def test_quadrature_cross_check_single_point():
    assert abs(overlap_quadrature(0.8, 2, 1.0) - overlap_closed_2d(0.8, 1.0)) < 1e-10


def test_closed_form_maxima_match_constants():
    # hard-contact overlap in closed form against the model constants
    for rho in (0.05, 0.1, 0.15):
        r_dep = 1.0 + rho
        u = 1.0 / (1.0 + rho)
        v3 = overlap_closed_3d(u, r_dep)
        expected3 = 2.0 * math.pi * rho**2 * (1.0 + 2.0 * rho / 3.0)
        assert v3 == pytest.approx(expected3, rel=1e-12)
        v2 = overlap_closed_2d(u, r_dep)
        expected2 = 2.0 * r_dep**2 * (
            math.acos(u) - math.sqrt(rho * (2.0 + rho)) / (1.0 + rho) ** 2
        )
        assert v2 == pytest.approx(expected2, rel=1e-12)


def test_overlap_potential_properties():
    u = np.arange(0.0, 1.0 + 1e-9, 1e-3)
    for d in (2, 3):
        pot = OverlapPotential(d=d, r_depletion=1.3, rho=0.2)
        vals = pot.value(u)
        assert np.all(vals >= 0.0)
        assert np.all(np.diff(vals) <= 1e-15)  # non-increasing
        assert pot.value(1.0) == 0.0
        assert pot.value(1.7) == 0.0
        assert pot.derivative(1.0) == 0.0
        assert pot.max_value() == pytest.approx(float(pot.value(1.0 / 1.2)), rel=1e-15)


def test_derivative_examples_and_fd_oracle():
    assert overlap_derivative(1.0, 2, 1.0) == 0.0
    assert overlap_derivative(0.5, 3, 1.0) == pytest.approx(-2.0 * math.pi * 0.75, rel=1e-13)
    # central finite difference of the closed form at u = 0.85
    h = 1e-6
    fd = (overlap_closed_2d(0.85 + h, 1.0) - overlap_closed_2d(0.85 - h, 1.0)) / (2 * h)
    assert overlap_derivative(0.85, 2, 1.0) == pytest.approx(fd, rel=1e-6)


def test_second_derivative_blowup_in_2d_only():
    u = 1.0 - 1e-4
    h = 1e-6
    for d, closed in [(2, overlap_closed_2d), (3, overlap_closed_3d)]:
        d2 = (closed(u + h, 1.0) - 2.0 * closed(u, 1.0) + closed(u - h, 1.0)) / h**2
        if d == 2:
            assert d2 > 1e2
        else:
            assert d2 <= 4.0 * math.pi


def test_rho_thresholds():
    rho2, rho3_2d = rho_thresholds(2)
    assert rho2 == pytest.approx(0.154700, abs=1e-6)
    assert rho3_2d == pytest.approx(0.414213, abs=1e-6)
    _, rho3_3d = rho_thresholds(3)
    assert rho3_3d == pytest.approx(0.224744, abs=1e-6)
    assert rho_thresholds(5) == rho_thresholds(3)


# -- three-body term ---------------------------------------------------------


def _pixel_triple_area(x1, x2, x3, r_dep, res=4096):
    # tight box: a point of the triple overlap is within r_dep of all centres
    pts = np.array([x1, x2, x3])
    lo = pts.max(axis=0) - r_dep
    hi = pts.min(axis=0) + r_dep
    xs = np.linspace(lo[0], hi[0], res)
    ys = np.linspace(lo[1], hi[1], res)
    cell = (xs[1] - xs[0]) * (ys[1] - ys[0])
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    inside = np.ones_like(gx, dtype=bool)
    for p in pts:
        inside &= (gx - p[0]) ** 2 + (gy - p[1]) ** 2 <= r_dep**2
    return float(np.count_nonzero(inside)) * cell


def test_three_body_disjoint_is_zero():
    side = 3.0
    pts = [(0.0, 0.0), (side, 0.0), (side / 2, side * math.sqrt(3) / 2)]
    assert three_body_2d(*pts, r_dep=1.1) == 0.0


def test_three_body_matches_pixel_oracle():
    rho = 0.3  # above rho2, so touching discs produce a triple overlap
    r_dep = 1.0 + rho
    pts = [(0.0, 0.0), (2.0, 0.0), (1.0, math.sqrt(3.0))]
    analytic = three_body_2d(*pts, r_dep=r_dep)
    oracle = _pixel_triple_area(*pts, r_dep=r_dep)
    assert analytic > 0
    assert analytic == pytest.approx(oracle, rel=1e-4)


def test_three_body_coincident_inclusion_exclusion():
    # three coincident balls: union volume = pi r^2 must equal
    # 3 v - 3 v + phi3, hence phi3 = pi r^2
    r_dep = 1.1
    val = three_body_2d((0.5, -0.2), (0.5, -0.2), (0.5, -0.2), r_dep=r_dep)
    assert val == pytest.approx(math.pi * r_dep**2, rel=1e-12)


def test_three_body_rejects_collinear():
    with pytest.raises(ValueError):
        three_body_2d((0.0, 0.0), (0.5, 0.0), (1.0, 0.0), r_dep=1.1)


# -- configuration energy ----------------------------------------------------


def test_energy_single_and_separated():
    p = ModelParams(d=2, r_sphere=1.0, r_particle=0.1)
    assert energy_pairwise(np.zeros((1, 2)), p) == pytest.approx(
        math.pi * 1.1**2, rel=1e-14
    )
    far = np.array([[0.0, 0.0], [5.0, 0.0]])
    assert energy_pairwise(far, p) == pytest.approx(2 * math.pi * 1.1**2, rel=1e-14)


def test_energy_matches_monte_carlo_oracle(gen):
    p = ModelParams(d=2, r_sphere=1.0, r_particle=0.1)
    for k in range(5):
        pts = random_admissible_spheres(gen, 3, p)
        est, se = monte_carlo_union_volume(pts, p, samples=400_000, seed=50 + k)
        assert abs(energy_pairwise(pts, p) - est) <= 4.0 * se


def test_energy_warns_beyond_pairwise_threshold():
    p = ModelParams(d=2, r_sphere=1.0, r_particle=0.3)
    with pytest.warns(UserWarning):
        energy_pairwise(hex_cluster(3), p)


def test_monte_carlo_examples():
    p2 = ModelParams(d=2, r_sphere=1.0, r_particle=0.1)
    est, se = monte_carlo_union_volume(np.zeros((1, 2)), p2, samples=1_000_000, seed=3)
    assert abs(est - math.pi * 1.1**2) <= 4 * se
    est2, se2 = monte_carlo_union_volume(np.zeros((2, 3)), ModelParams(d=3, r_sphere=1.0, r_particle=0.1), samples=200_000, seed=4)
    assert abs(est2 - 4.0 * math.pi / 3.0 * 1.1**3) <= 4 * se2
    # square of touching discs: pairwise reduction is exact for rho <= rho2
    square = 2.0 * np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    est3, se3 = monte_carlo_union_volume(square, p2, samples=1_000_000, seed=5)
    assert abs(est3 - energy_pairwise(square, p2)) <= 4 * se3
    assert monte_carlo_union_volume(np.zeros((0, 2)), p2, samples=10_000, seed=0) == (0.0, 0.0)
    with pytest.raises(ValueError):
        monte_carlo_union_volume(np.zeros((1, 2)), p2, samples=100, seed=0)


def test_monte_carlo_deterministic():
    p = ModelParams(d=2, r_sphere=1.0, r_particle=0.1)
    a = monte_carlo_union_volume(hex_cluster(3), p, samples=50_000, seed=9)
    b = monte_carlo_union_volume(hex_cluster(3), p, samples=50_000, seed=9)
    assert a == b


# -- gradient ----------------------------------------------------------------


def test_gradient_zero_when_separated():
    p = ModelParams(d=2, r_sphere=1.0, r_particle=0.1)
    pts = np.array([[0.0, 0.0], [5.0, 0.0], [0.0, -5.0]])
    assert np.all(energy_gradient(pts, p) == 0.0)


def test_gradient_two_spheres_at_contact():
    p = ModelParams(d=3, r_sphere=1.0, r_particle=0.1)
    pts = np.array([[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]])
    g = energy_gradient(pts, p)
    r_dep = p.r_depletion
    expected = math.pi * r_dep**2 * (1.0 - 1.0 / r_dep**2)
    assert np.allclose(g[0], [-expected, 0.0, 0.0], rtol=1e-12)
    assert np.allclose(g[1], [expected, 0.0, 0.0], rtol=1e-12)


def test_gradient_finite_difference_oracle(gen):
    p = ModelParams(d=2, r_sphere=1.0, r_particle=0.1)
    h = 1e-5 * p.r_sphere
    pts = random_admissible_spheres(gen, 5, p, avoid_tangency=1e-3)
    grad = energy_gradient(pts, p)
    for i in range(5):
        for c in range(2):
            e_plus = pts.copy()
            e_plus[i, c] += h
            e_minus = pts.copy()
            e_minus[i, c] -= h
            fd = (energy_pairwise(e_plus, p) - energy_pairwise(e_minus, p)) / (2 * h)
            assert grad[i, c] == pytest.approx(fd, rel=1e-6, abs=1e-9)


def test_gradient_locality_exact():
    p = ModelParams(d=2, r_sphere=1.0, r_particle=0.1)
    pts = np.array([[0.0, 0.0], [2.05, 0.0], [8.0, 0.0]])
    g0 = energy_gradient(pts, p)[0].copy()
    moved = pts.copy()
    moved[2] = [9.5, 3.0]  # stays beyond 2 r_dep of sphere 0
    g0_moved = energy_gradient(moved, p)[0]
    assert np.array_equal(g0, g0_moved)


def test_energy_rigid_motion_invariance(gen):
    p = ModelParams(d=3, r_sphere=1.0, r_particle=0.12)
    pts = random_admissible_spheres(gen, 4, p)
    e0 = energy_pairwise(pts, p)
    q, _ = np.linalg.qr(gen.normal(size=(3, 3)))
    moved = pts @ q.T + gen.normal(size=3)
    assert energy_pairwise(moved, p) == pytest.approx(e0, rel=1e-12)


def test_gradient_rejects_coincident():
    p = ModelParams(d=2, r_sphere=1.0, r_particle=0.1)
    with pytest.raises(ValueError):
        energy_gradient(np.zeros((2, 2)), p)


# -- minimal energy ----------------------------------------------------------


def test_minimal_energy_values():
    p2 = ModelParams(d=2, r_sphere=1.0, r_particle=0.1)
    assert minimal_energy(1, p2) == pytest.approx(math.pi * 1.1**2, rel=1e-14)
    p3 = ModelParams(d=3, r_sphere=1.0, r_particle=0.1)
    rho = 0.1
    expected = 2 * (4 * math.pi / 3) * 1.1**3 - 2 * math.pi * rho**2 * (1 + 2 * rho / 3)
    assert minimal_energy(2, p3) == pytest.approx(expected, rel=1e-12)
    with pytest.raises(ValueError, match="n=10"):
        minimal_energy(10, p3)


def _exact_minimal_energy_2d(n, rho):
    p = ModelParams(d=2, r_sphere=1.0, r_particle=rho)
    return minimal_energy(n, p)


def test_asymptotic_minimal_energy_remainder_orders():
    # d=2: remainder O(rho^{5/2}); the scaled gap must be stable in rho
    n = 7
    ratios = []
    for rho in (0.02, 0.01, 0.005):
        gap = abs(_exact_minimal_energy_2d(n, rho) - asymptotic_minimal_energy(n, 2, rho))
        ratios.append(gap / rho**2.5)
    assert max(ratios) <= 2.0 * min(ratios)
    # d=3: remainder O(rho^3)
    ratios3 = []
    for rho in (0.02, 0.01, 0.005):
        p = ModelParams(d=3, r_sphere=1.0, r_particle=rho)
        gap = abs(minimal_energy(2, p) - asymptotic_minimal_energy(2, 3, rho))
        ratios3.append(gap / rho**3)
    assert max(ratios3) <= 2.0 * min(ratios3)


def test_energy_model_body_orders():
    p = ModelParams(d=2, r_sphere=1.0, r_particle=0.3)  # rho > rho2
    with pytest.raises(ValueError):
        EnergyModel(ModelParams(d=3, r_sphere=1.0, r_particle=0.3), "pairwise-plus-triple")
    tri = hex_cluster(3)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        e_pair = EnergyModel(p, "pairwise").energy(tri)
    e_triple = EnergyModel(p, "pairwise-plus-triple").energy(tri)
    mc, se = monte_carlo_union_volume(tri, p, samples=2_000_000, seed=77)
    # the three-body correction moves the pairwise value onto the true volume
    assert abs(e_triple - mc) <= 4 * se
    assert abs(e_triple - mc) < abs(e_pair - mc)


def test_pairwise_equals_union_below_threshold():
    # at rho <= rho2 the triple term vanishes for touching discs
    p = ModelParams(d=2, r_sphere=1.0, r_particle=0.15)
    assert three_body_2d(*hex_cluster(3), r_dep=p.r_depletion) == 0.0

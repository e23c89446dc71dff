from math import factorial

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from nsdelta.domains import mesh_from_cells
from nsdelta.quadrature import (ESTIMATOR_DEGREE, MAX_DEGREE, WeightSpec, check_alpha, edge_rule,
                                integrate, rule_for_degree, separation_distance, split_rule,
                                weighted_norm_sq)


def bary_monomial_exact(a, b, c, area):
    """int_T l0^a l1^b l2^c = 2 |T| a! b! c! / (a+b+c+2)!"""
    return 2.0 * area * factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 2)


def polar_integral(z, A, B, alpha):
    """int over triangle (z, A, B) of |x - z|^alpha by 1D polar quadrature."""
    z, A, B = (np.asarray(v, float) for v in (z, A, B))
    d = B - A
    n = np.array([d[1], -d[0]]) / np.linalg.norm(d)
    dist = abs(np.dot(A - z, n))
    if np.dot(A - z, n) < 0:
        n = -n
    tA = np.arctan2(*(A - z)[::-1])
    tB = np.arctan2(*(B - z)[::-1])
    if tB < tA:
        tA, tB = tB, tA
    if tB - tA > np.pi:
        tA, tB = tB, tA + 2 * np.pi
    tn = np.arctan2(n[1], n[0])

    def f(t):
        rmax = dist / np.cos(t - tn)
        return rmax ** (alpha + 2) / (alpha + 2)
    return quad(f, tA, tB, epsabs=1e-14, epsrel=1e-13, limit=200)[0]


def test_low_degree_rules_are_classical():
    r1 = rule_for_degree(1)
    assert len(r1) == 1 and np.allclose(r1.points, 1 / 3) and r1.weights[0] == 1.0
    r2 = rule_for_degree(2)
    assert len(r2) == 3
    assert np.allclose(np.sort(r2.points, axis=1), [[0, 0.5, 0.5]] * 3)


@pytest.mark.parametrize("d", [0, MAX_DEGREE + 1])
def test_degree_out_of_range(d):
    with pytest.raises(ValueError):
        rule_for_degree(d)


@given(st.integers(1, MAX_DEGREE))
def test_rule_structure(d):
    r = rule_for_degree(d)
    assert r.exact_degree >= d
    assert abs(r.weights.sum() - 1.0) < 1e-14
    assert np.all(r.weights > 0)
    assert np.all(r.points >= -1e-15) and np.allclose(r.points.sum(axis=1), 1.0)


@pytest.mark.parametrize("d", [3, 7, 12, ESTIMATOR_DEGREE])
def test_monomial_exactness_on_random_triangle(d, rng):
    P = rng.uniform(-2, 2, (3, 2))
    mesh = mesh_from_cells(P if np.linalg.det(np.array([P[1] - P[0], P[2] - P[0]])) > 0 else P[[0, 2, 1]], [(0, 1, 2)])
    rule = rule_for_degree(d)
    area = mesh.areas[0]
    for a in range(d + 1):
        for b in range(d + 1 - a):
            c = rng.integers(0, d - a - b + 1)
            q = area * np.dot(rule.weights, rule.points[:, 0] ** a * rule.points[:, 1] ** b * rule.points[:, 2] ** c)
            exact = bary_monomial_exact(a, b, c, area)
            assert abs(q - exact) <= 1e-12 * exact


def test_x_squared_on_reference(reference_triangle):
    val = integrate(reference_triangle, 0, lambda x: x[:, 0] ** 2, rule_for_degree(2))
    assert val == pytest.approx(1 / 12, abs=1e-15)


def test_constant_gives_area(rng):
    mesh = mesh_from_cells([(0, 0), (3, 0.5), (1, 2)], [(0, 1, 2)])
    for d in (1, 5, 19):
        assert integrate(mesh, 0, lambda x: np.ones(len(x)), rule_for_degree(d)) == pytest.approx(mesh.areas[0], rel=1e-14)


@pytest.mark.parametrize("d", [1, 5, 11, 15])
def test_edge_rule_exactness(d):
    t, w = edge_rule(d)
    for k in range(d + 1):
        assert np.dot(w, t ** k) == pytest.approx(1 / (k + 1), rel=1e-13)


def test_polar_oracle_vertex_source_converges(reference_triangle):
    """Unsplit degree-19 integration of |x|^1.5 over uniform refinements."""
    from nsdelta.mesh import uniform_refine
    exact = polar_integral((0, 0), (1, 0), (0, 1), 1.5)
    rule = rule_for_degree(19)
    errs = []
    mesh = reference_triangle
    for _ in range(3):
        w = WeightSpec(1.5, [(0.0, 0.0)])
        total = sum(weighted_norm_sq(mesh, c, lambda x: np.ones(len(x)), w, rule, split=False)
                    for c in range(mesh.n_cells))
        errs.append(abs(total - exact))
        mesh = uniform_refine(mesh, 1)
    assert errs[0] < 1e-5
    assert errs[2] < errs[1] < errs[0]


def test_split_rule_improves_interior_source_integral():
    """Splitting at an interior source gains more than 10x against the polar oracle."""
    P = np.array([(0.0, 0.0), (1.0, 0.0), (0.2, 0.9)])
    mesh = mesh_from_cells(P, [(0, 1, 2)])
    z = np.array([0.37, 0.29])
    exact = sum(polar_integral(z, P[i], P[(i + 1) % 3], 1.5) for i in range(3))
    w = WeightSpec(1.5, [z])
    rule = rule_for_degree(19)
    one = lambda x: np.ones(len(x))
    plain = abs(weighted_norm_sq(mesh, 0, one, w, rule, split=False) - exact)
    split = abs(weighted_norm_sq(mesh, 0, one, w, rule, split=True) - exact)
    assert split < 1e-6 * exact
    assert split * 10 < plain


def test_split_rule_on_edge_point_integrates_polynomials():
    rule = rule_for_degree(9)
    pts, w = split_rule(rule, [[0.5, 0.5, 0.0]])
    assert abs(w.sum() - 1) < 1e-14
    for a, b, c in [(2, 3, 1), (0, 4, 5), (3, 0, 0)]:
        q = np.dot(w, pts[:, 0] ** a * pts[:, 1] ** b * pts[:, 2] ** c)
        assert q == pytest.approx(2 * factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 2), rel=1e-12)


def test_weighted_norm_alpha_limits(reference_triangle):
    one = lambda x: np.ones(len(x))
    w = WeightSpec(1e-9, [(0.3, 0.3)])
    assert weighted_norm_sq(reference_triangle, 0, one, w, rule_for_degree(19)) == pytest.approx(0.5, rel=1e-6)
    with pytest.raises(ValueError):
        WeightSpec(2.0, [(0.3, 0.3)])
    for bad in (0.0, -0.5, 2.0, 3.0):
        with pytest.raises(ValueError):
            check_alpha(bad)


def test_weighted_norm_alpha_one_polar(reference_triangle):
    """g = 1, alpha = 1, source at the right-angle vertex: int r * r dr dtheta."""
    exact = quad(lambda t: (1 / (np.cos(t) + np.sin(t))) ** 3 / 3, 0, np.pi / 2, epsabs=1e-15)[0]
    w = WeightSpec(1.0, [(0.0, 0.0)])
    val = weighted_norm_sq(reference_triangle, 0, lambda x: np.ones(len(x)), w, rule_for_degree(19))
    assert val == pytest.approx(exact, rel=1e-8)


@given(st.floats(0.05, 1.95), st.floats(0.5, 3.0))
def test_weighted_norm_monotone_in_g(alpha, s):
    mesh = mesh_from_cells([(0, 0), (1, 0), (0.3, 0.8)], [(0, 1, 2)])
    w = WeightSpec(alpha, [(0.4, 0.3)])
    rule = rule_for_degree(19)
    g = lambda x: np.sin(3 * x[:, 0]) + x[:, 1]
    small = weighted_norm_sq(mesh, 0, g, w, rule)
    big = weighted_norm_sq(mesh, 0, lambda x: (1 + s) * np.abs(g(x)), w, rule)
    assert 0 <= small <= big


def test_rho_is_piecewise_across_circles(square):
    Z = np.array([(0.25, 0.25), (0.25, 0.75), (0.75, 0.25), (0.75, 0.75)])
    dz = separation_distance(square, Z)
    assert dz == pytest.approx(0.25)
    w = WeightSpec.for_mesh(square, 1.5, Z)
    for z in Z:
        for theta in np.linspace(0, 2 * np.pi, 7):
            e = np.array([np.cos(theta), np.sin(theta)])
            inside = z + (0.5 * dz - 1e-9) * e
            outside = z + (0.5 * dz + 1e-9) * e
            assert w(inside[None])[0] == pytest.approx((0.5 * dz) ** 1.5, rel=1e-7)
            assert w(outside[None])[0] == 1.0
    assert w(np.array([[0.5, 0.5]]))[0] == 1.0


def test_weight_spec_needs_points():
    with pytest.raises(ValueError):
        WeightSpec(1.0, np.zeros((0, 2)))

import numpy as np
import pytest

from fol.moments import monomial_moment, sphere_moment
from fol.params import ParameterError, Params
from fol.polys import Poly, even_monomials
from fol.quadrature import (build_sphere_quadrature, equator_integral_poly,
                            inner_product, negative_side_integral_poly,
                            negative_side_rule, radial_rule)

from conftest import CONFIGS


@pytest.mark.parametrize("n,a", CONFIGS)
def test_even_monomial_exactness(n, a):
    p = Params.from_a(n, a)
    q = build_sphere_quadrature(p, 16)
    assert q.exactness_degree >= 16
    for d in range(0, q.exactness_degree + 1, 2):
        for mon in even_monomials(n + 1, d):
            exact = monomial_moment(mon, a)
            got = q.integrate(np.prod(q.points ** np.array(mon), axis=1))
            if exact == 0.0:
                assert abs(got) < 1e-13
            else:
                assert got == pytest.approx(exact, rel=1e-12)


@pytest.mark.parametrize("n,a", CONFIGS)
def test_total_mass_and_positivity(n, a):
    p = Params.from_a(n, a)
    q = build_sphere_quadrature(p, 8)
    assert np.all(q.weights > 0)
    assert q.total_mass == pytest.approx(monomial_moment((0,) * (n + 1), a), rel=1e-12)


def test_odd_parity_integrates_to_zero():
    p = Params.from_a(1, 0.5)
    q = build_sphere_quadrature(p, 12)
    odd = q.points[:, 1]                       # odd in y
    even = q.points[:, 0] ** 2                 # even
    assert abs(inner_product(lambda pts: pts[:, 1], lambda pts: pts[:, 0] ** 2, q)) < 1e-13
    assert abs(q.integrate(odd * even)) < 1e-13


def test_constant_inner_product_is_mass():
    p = Params.from_a(1, 0.0)
    q = build_sphere_quadrature(p, 8)
    one = lambda pts: np.ones(pts.shape[0])
    assert inner_product(one, one, q) == pytest.approx(2 * np.pi, rel=1e-13)


def test_nodes_avoid_equator_and_poles():
    for a in (-0.9, -0.5, 0.5):
        p = Params.from_a(1, a)
        q = build_sphere_quadrature(p, 24)
        assert np.min(np.abs(q.points[:, -1])) > 0
        assert np.max(np.abs(q.points[:, -1])) < 1


def test_order_validation():
    p = Params.from_a(1, 0.0)
    with pytest.raises(ParameterError):
        build_sphere_quadrature(p, 1)
    with pytest.raises(ParameterError):
        Params.from_a(3, 0.0).require_desk_scale()


def test_radial_rule_moments():
    p = Params.from_a(1, 0.5)
    rho, w = radial_rule(p, 0.7, 16)
    for k in range(0, 6):
        exact = 0.7 ** (p.n + p.a + 1 + k) / (p.n + p.a + 1 + k)
        assert np.dot(w, rho**k) == pytest.approx(exact, rel=1e-13)


def test_equator_integral_poly_n1():
    poly = Poly(2, {(2, 0): 1.0, (0, 2): 5.0, (1, 0): 3.0})
    # two points (1,0), (-1,0): x^2 contributes 2, y^2 nothing, x odd cancels
    assert equator_integral_poly(poly, 1) == pytest.approx(2.0)


def test_equator_integral_poly_n2():
    poly = Poly(3, {(2, 0, 0): 1.0})
    assert equator_integral_poly(poly, 2) == pytest.approx(np.pi, rel=1e-13)


def test_negative_side_integral_poly_constant_n2():
    # int over half circle of ((theta.e)_-)^{1-s}: Beta closed form vs rule
    import math
    power = 0.4
    e = np.array([np.cos(0.3), np.sin(0.3)])
    one = Poly(3, {(0, 0, 0): 1.0})
    exact = math.exp(math.lgamma(0.5 * (power + 1.0)) + math.lgamma(0.5)
                     - math.lgamma(0.5 * (power + 2.0)))
    assert negative_side_integral_poly(one, e, power, 2) == pytest.approx(exact, rel=1e-12)


def test_negative_side_rule_matches_poly_path():
    power = 0.6
    e = np.array([np.cos(1.1), np.sin(1.1)])
    poly = Poly(3, {(2, 0, 0): 1.3, (1, 1, 0): -0.4, (0, 0, 0): 0.7})
    pts, w = negative_side_rule(2, e, power, k=60)
    got = float(np.dot(w, poly.evaluate(pts)))
    exact = negative_side_integral_poly(poly, e, power, 2)
    assert got == pytest.approx(exact, rel=1e-10)


def test_negative_side_n1_is_point_mass():
    poly = Poly(2, {(1, 0): 2.0, (0, 0): 1.0})
    e = np.array([1.0])
    assert negative_side_integral_poly(poly, e, 0.5, 1) == pytest.approx(-1.0)

import math

import numpy as np
import pytest

from fol.moments import (axis_moment, degree_factor, monomial_moment,
                         rational_moment_part, sphere_moment, weighted_mass)
from fol.params import ParameterError, Params


def test_unweighted_circle_mass():
    assert monomial_moment((0, 0), 0.0) == pytest.approx(2 * math.pi, rel=1e-15)


def test_odd_exponent_vanishes():
    for a in (-0.5, 0.0, 0.7):
        assert monomial_moment((1, 0), a) == 0.0
        assert monomial_moment((0, 3), a) == 0.0


def test_weighted_circle_mass_gamma_form():
    expected = 2 * math.gamma(0.75) * math.gamma(0.5) / math.gamma(1.25)
    assert monomial_moment((0, 0), 0.5) == pytest.approx(expected, rel=1e-14)


def test_weighted_circle_mass_vs_adaptive_quadrature():
    import scipy.integrate as si
    val, _ = si.quad(lambda t: abs(math.sin(t)) ** 0.5, 0, 2 * math.pi,
                     points=[math.pi], limit=200)
    assert monomial_moment((0, 0), 0.5) == pytest.approx(val, rel=1e-10)


def test_sphere_second_moment():
    assert monomial_moment((0, 0, 2), 0.0) == pytest.approx(4 * math.pi / 3, rel=1e-14)


def test_moment_symmetry_in_x_exponents():
    for exps in [(2, 4, 0), (4, 2, 0), (0, 2, 2), (2, 0, 2)]:
        swapped = (exps[1], exps[0], exps[2])
        assert monomial_moment(exps, 0.3) == pytest.approx(
            monomial_moment(swapped, 0.3), rel=1e-15)


def test_mass_positive_across_weights():
    for n in (1, 2):
        for a in np.linspace(-0.95, 0.95, 9):
            assert weighted_mass(n, a) > 0


def test_invalid_weight_exponent():
    with pytest.raises(ParameterError):
        monomial_moment((0, 0), -1.0)
    with pytest.raises(ParameterError):
        monomial_moment((0, 0), 1.5)
    # general exponents beyond (-1, 1) stay legal for the internal moment
    assert sphere_moment((0, 0), 1.5) > 0


def test_rational_factorization_matches_float():
    p = Params.from_a(1, 0.5)
    for exps in [(0, 0), (2, 0), (0, 2), (4, 2), (2, 4)]:
        d = sum(exps)
        r = rational_moment_part(exps, p.a_exact)
        assert float(r) * degree_factor(p.n, p.a, d) == pytest.approx(
            monomial_moment(exps, p.a), rel=1e-13)


def test_axis_moment_is_special_case():
    assert axis_moment(1, 0.5) == pytest.approx(sphere_moment((0, 0), 0.5), rel=1e-15)
    assert axis_moment(2, 1.0) == pytest.approx(sphere_moment((0, 0, 0), 1.0), rel=1e-15)

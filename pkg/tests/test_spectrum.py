import numpy as np
import pytest

from fol.params import Params
from fol.polys import Poly
from fol.quadrature import build_sphere_quadrature
from fol.spectrum import EigenBasis, build_basis, project

from conftest import CONFIGS, get_basis, get_rule


@pytest.mark.parametrize("n,a", CONFIGS)
def test_eigenvalue_map(n, a):
    p = Params.from_a(n, a)
    assert p.eigenvalue(0.0) == 0.0
    assert p.eigenvalue(1.0) == pytest.approx(n + a, rel=1e-15)
    if n == 1 and a == 0.0:
        assert p.eigenvalue(2.0) == pytest.approx(4.0)  # classical circle k^2


def test_one_mode_per_degree_n1(config):
    n, a = config
    if n != 1:
        pytest.skip("multiplicity statement is for n = 1")
    basis = get_basis(n, a, 6)
    for d in range(7):
        assert len(basis.indices_of_degree(d)) == 1


@pytest.mark.parametrize("n,a", CONFIGS)
def test_orthonormality_and_la_kernel(n, a):
    basis = get_basis(n, a, 6 if n == 2 else 8)
    q = get_rule(n, a, order=2 * basis.max_degree + 6)
    mat = basis.mode_matrix(q)
    gram = mat @ (q.weights[:, None] * mat.T)
    assert np.max(np.abs(gram - np.eye(basis.size))) < 1e-12
    p = Params.from_a(n, a)
    for m in basis.modes:
        assert m.poly_exact.la_image(p.a_exact).is_zero()
        assert m.eigenvalue == pytest.approx(p.eigenvalue(m.degree), rel=1e-14)


def test_classical_degree_two_mode():
    basis = get_basis(1, 0.0, 4)
    m = basis.modes[basis.indices_of_degree(2)[0]]
    coeffs = m.poly_exact.coeffs
    assert coeffs[(2, 0)] == -coeffs[(0, 2)]  # proportional to x^2 - y^2


def test_weighted_degree_two_mode():
    basis = get_basis(1, 0.5, 4)
    m = basis.modes[basis.indices_of_degree(2)[0]]
    coeffs = m.poly_exact.coeffs
    ratio = coeffs[(0, 2)] / coeffs[(2, 0)]
    assert float(ratio) == pytest.approx(-1.0 / 1.5, rel=1e-15)  # -1/(1+a)


def test_constant_only_basis():
    basis = build_basis(Params.from_a(1, 0.3), 0)
    assert basis.size == 1
    assert basis.modes[0].degree == 0
    assert basis.modes[0].eigenvalue == 0.0


def test_eigenvalues_nondecreasing(config):
    n, a = config
    basis = get_basis(n, a)
    lam = basis.eigenvalues
    assert np.all(np.diff(lam) >= -1e-14)


def test_project_basis_mode_is_unit(config):
    n, a = config
    basis = get_basis(n, a, 6)
    q = get_rule(n, a, order=2 * basis.max_degree + 6)
    idx = basis.indices_of_degree(2)[0]
    tr = project(lambda pts: basis.modes[idx].values(pts), basis, q)
    assert tr.coefficients[idx] == pytest.approx(1.0, abs=1e-12)
    others = np.delete(tr.coefficients, idx)
    assert np.max(np.abs(others)) < 1e-10
    assert tr.residual_norm < 1e-10


def test_project_constant(config):
    n, a = config
    basis = get_basis(n, a, 4)
    q = get_rule(n, a, order=14)
    tr = project(lambda pts: np.ones(pts.shape[0]), basis, q)
    mass = q.total_mass
    assert tr.coefficients[basis.constant_index] == pytest.approx(np.sqrt(mass), rel=1e-12)
    assert tr.residual_norm < 1e-10


def test_completeness_on_random_even_polynomials(config, rng):
    n, a = config
    K = 8 if n == 1 else 6
    basis = get_basis(n, a, K)
    q = get_rule(n, a, order=2 * K + 8)
    from fol.polys import even_monomials
    for _ in range(5):
        coeffs = {}
        for d in range(0, K + 1):
            for mon in even_monomials(n + 1, d):
                coeffs[mon] = rng.normal()
        poly = Poly(n + 1, coeffs)
        tr = project(lambda pts: poly.evaluate(pts), basis, q)
        assert tr.residual_norm < 1e-10


@pytest.mark.parametrize("n,a,K,name", [
    (1, 0.5, 4, "basis_n1_a05_K4.json"),
    (2, -0.5, 3, "basis_n2_am05_K3.json"),
])
def test_golden_basis_pinned(n, a, K, name):
    """Freshly built bases must reproduce the pinned documents byte for byte."""
    from pathlib import Path
    golden = (Path(__file__).parent / "data" / name).read_text()
    fresh = build_basis(Params.from_a(n, a), K).to_json()
    assert fresh == golden


def test_json_roundtrip(config):
    n, a = config
    basis = get_basis(n, a, 4)
    doc = basis.to_json()
    loaded = EigenBasis.from_json(doc)
    assert loaded.max_degree == basis.max_degree
    assert loaded.size == basis.size
    pts = get_rule(n, a, 10).points[:7]
    for m1, m2 in zip(basis.modes, loaded.modes):
        assert m1.degree == m2.degree
        assert m1.eigenvalue == pytest.approx(m2.eigenvalue, rel=1e-15)
        assert np.allclose(m1.values(pts), m2.values(pts), atol=1e-14)
    assert EigenBasis.from_json(loaded.to_json()).to_json() == doc

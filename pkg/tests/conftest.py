import numpy as np
import pytest

from fol.params import Params
from fol.quadrature import build_sphere_quadrature
from fol.spectrum import build_basis

CONFIGS = [(1, -0.5), (1, 0.0), (1, 0.5), (2, -0.5), (2, 0.0), (2, 0.5)]

_basis_cache = {}
_rule_cache = {}


def get_basis(n, a, K=None):
    if K is None:
        K = 12 if n == 1 else 8
    key = (n, round(a, 14), K)
    if key not in _basis_cache:
        _basis_cache[key] = build_basis(Params.from_a(n, a), K)
    return _basis_cache[key]


def get_rule(n, a, order=None, weight_exponent=None):
    if order is None:
        order = 40
    key = (n, round(a, 14), order, weight_exponent)
    if key not in _rule_cache:
        _rule_cache[key] = build_sphere_quadrature(
            Params.from_a(n, a), order, weight_exponent=weight_exponent)
    return _rule_cache[key]


@pytest.fixture(params=CONFIGS, ids=lambda c: f"n{c[0]}a{c[1]}")
def config(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)

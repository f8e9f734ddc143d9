"""Exact weighted moments on the unit sphere of R^{n+1}.

Everything here is the classical Gamma-product formula

    int_{S^n} prod_i |theta_i|^{p_i} dH^n
        = 2 * prod_i Gamma((p_i + 1)/2) / Gamma((n + 1 + sum_i p_i)/2),

evaluated through log-Gamma for stability.  Monomial integrals against
a weight |theta_{n+1}|^w reduce to it by adding w to the last exponent,
and vanish by symmetry whenever some exponent is odd.

For exact-rational orthogonalization the module also exposes the
factorization  moment = rational_part * degree_factor,  where the
transcendental `degree_factor` is shared by all even monomials of equal
total degree.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .params import ParameterError


def sphere_moment(exponents, weight_exponent: float = 0.0) -> float:
    """Integral of theta^exponents * |theta_last|^weight_exponent over the unit sphere.

    `exponents` has one entry per ambient coordinate (n+1 of them); the
    weight applies to the last coordinate.  Odd exponents give 0.
    """
    if weight_exponent <= -1.0:
        raise ParameterError(f"weight exponent must exceed -1, got {weight_exponent}")
    exps = tuple(int(e) for e in exponents)
    if any(e < 0 for e in exps):
        raise ParameterError(f"exponents must be nonnegative, got {exps}")
    if any(e % 2 for e in exps):
        return 0.0
    dim = len(exps)  # n + 1 ambient coordinates
    powers = [float(e) for e in exps[:-1]] + [exps[-1] + float(weight_exponent)]
    log_num = math.log(2.0) + sum(math.lgamma(0.5 * (p + 1.0)) for p in powers)
    log_den = math.lgamma(0.5 * (dim + sum(powers)))
    return math.exp(log_num - log_den)


def axis_moment(n: int, q: float) -> float:
    """Integral of |theta_{n+1}|^q over the unit sphere of R^{n+1}, q > -1."""
    if q <= -1.0:
        raise ParameterError(f"axis exponent must exceed -1, got {q}")
    log_num = math.log(2.0) + n * math.lgamma(0.5) + math.lgamma(0.5 * (q + 1.0))
    log_den = math.lgamma(0.5 * (n + 1 + q))
    return math.exp(log_num - log_den)


def weighted_mass(n: int, a: float) -> float:
    """Total weighted surface mass int_{S^n} |theta_{n+1}|^a dH^n."""
    return axis_moment(n, a)


def monomial_moment(exponents, a: float) -> float:
    """Weighted sphere moment of a monomial against |theta_{n+1}|^a dH^n.

    Unlike the general `sphere_moment`, the exponent here is the problem
    weight and must lie in (-1, 1).
    """
    if not -1.0 < a < 1.0:
        raise ParameterError(f"weight exponent must lie in (-1, 1), got {a}")
    return sphere_moment(exponents, weight_exponent=a)


# ---------------------------------------------------------------------------
# Exact rational factorization, used by the eigenbasis orthogonalization.
# ---------------------------------------------------------------------------

def rational_moment_part(exponents, a_exact: Fraction) -> Fraction:
    """Rational factor R with  moment = R * degree_factor(total degree).

    Valid for even exponents; odd ones return 0.  Derivation: for
    exponents (2m_1, ..., 2m_n, 2j),

        Gamma(m + 1/2) = sqrt(pi) * (2m)! / (4^m m!),
        Gamma(j + (1+a)/2) = Gamma((1+a)/2) * prod_{l<j} ((1+a)/2 + l),

    so the sqrt(pi)^n and Gamma((1+a)/2) factors are common to the whole
    degree class and live in `degree_factor`.
    """
    exps = tuple(int(e) for e in exponents)
    if any(e % 2 for e in exps):
        return Fraction(0)
    r = Fraction(1)
    for e in exps[:-1]:
        m = e // 2
        r *= Fraction(math.factorial(2 * m), 4**m * math.factorial(m))
    j = exps[-1] // 2
    half = (1 + a_exact) / 2
    for l in range(j):
        r *= half + l
    return r


def degree_factor(n: int, a: float, total_degree: int) -> float:
    """Transcendental factor shared by all even monomials of one total degree."""
    log_val = (
        math.log(2.0)
        + n * math.lgamma(0.5)
        + math.lgamma(0.5 * (1.0 + a))
        - math.lgamma(0.5 * (n + 1 + total_degree + a))
    )
    return math.exp(log_val)

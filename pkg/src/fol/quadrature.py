"""Quadrature rules for the weighted sphere, the equator, and radial shells.

The sphere rule parametrizes S^n as theta = (sqrt(1-t^2) * omega, t) with
t the last coordinate and omega on S^{n-1}, then substitutes u = t^2 so
that the weight |t|^w (1-t^2)^{(n-2)/2} dt becomes a Jacobi weight
u^{(w-1)/2} (1-u)^{(n-2)/2} du on (0, 1).  Gauss-Jacobi nodes therefore
absorb the |y|^w singularity exactly and never touch the equator u = 0
or the poles u = 1.  The rule is exact for even monomials up to the
advertised degree; odd monomials cancel through the symmetric node
layout.

Only n in {1, 2} are built (desk scale).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_jacobi

from .moments import sphere_moment
from .params import ParameterError, Params


def jacobi_01(k: int, alpha: float, beta: float):
    """Nodes/weights for int_0^1 u^beta (1-u)^alpha f(u) du, exact to u-degree 2k-1."""
    x, w = roots_jacobi(k, alpha, beta)
    u = 0.5 * (x + 1.0)
    w = w * 2.0 ** (-(alpha + beta + 1.0))
    return u, w


@dataclass(frozen=True)
class SphereQuadrature:
    """Positive rule approximating integration against |theta_{n+1}|^w dH^n."""

    n: int
    weight_exponent: float
    points: np.ndarray     # (N, n+1)
    weights: np.ndarray    # (N,)
    exactness_degree: int

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(self.weights, values))

    def integrate_fn(self, f) -> float:
        return self.integrate(f(self.points))

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())


def build_sphere_quadrature(p: Params, order: int, weight_exponent: float | None = None,
                            circle_points: int | None = None) -> SphereQuadrature:
    """Tensor rule: Gauss-Jacobi in the polar variable x equatorial rule.

    `order` is the guaranteed polynomial exactness degree (>= 2).  The
    weight exponent defaults to p.a and may be overridden (e.g. -s for
    the couplings that arise in competitor energies).
    """
    p.require_desk_scale()
    if order < 2:
        raise ParameterError(f"quadrature order must be >= 2, got {order}")
    w_exp = p.a if weight_exponent is None else float(weight_exponent)
    if w_exp <= -1.0:
        raise ParameterError(f"weight exponent must exceed -1, got {w_exp}")
    n = p.n

    k = max(2, (order + 2 + 3) // 4)      # 4k - 2 >= order
    u, uw = jacobi_01(k, (n - 2) / 2.0, (w_exp - 1.0) / 2.0)
    t = np.sqrt(u)
    rho = np.sqrt(1.0 - u)

    if n == 1:
        # four symmetric images of each Jacobi node, each carrying half the u-weight
        pts, wts = [], []
        for sx in (+1.0, -1.0):
            for sy in (+1.0, -1.0):
                pts.append(np.column_stack([sx * rho, sy * t]))
                wts.append(0.5 * uw)
        points = np.vstack(pts)
        weights = np.concatenate(wts)
        exactness = 4 * k - 2
    else:
        m = circle_points if circle_points is not None else 2 * ((order + 4) // 2)
        if m % 2:
            m += 1
        ang = 2.0 * np.pi * np.arange(m) / m
        cw = 2.0 * np.pi / m
        pts, wts = [], []
        for sy in (+1.0, -1.0):
            x1 = np.outer(rho, np.cos(ang)).ravel()
            x2 = np.outer(rho, np.sin(ang)).ravel()
            yy = np.repeat(sy * t, m)
            pts.append(np.column_stack([x1, x2, yy]))
            wts.append(np.repeat(0.5 * uw, m) * cw)
        points = np.vstack(pts)
        weights = np.concatenate(wts)
        exactness = min(4 * k - 2, m - 1)
    return SphereQuadrature(n=n, weight_exponent=w_exp, points=points,
                            weights=weights, exactness_degree=exactness)


def inner_product(f, g, q: SphereQuadrature) -> float:
    """Weighted sphere inner product by quadrature; f, g map (N, n+1) -> (N,)."""
    fv = f(q.points) if callable(f) else np.asarray(f)
    gv = g(q.points) if callable(g) else np.asarray(g)
    return float(np.dot(q.weights, fv * gv))


def radial_rule(p: Params, r: float, k: int = 32):
    """Nodes/weights for int_0^r g(rho) rho^{n+a} drho (polar bulk factor)."""
    u, w = jacobi_01(k, 0.0, p.n + p.a)
    return r * u, w * r ** (p.n + p.a + 1.0)


def equator_points(n: int, m: int = 256) -> np.ndarray:
    """Sample points of the equatorial sphere {y = 0, |x| = 1} in R^{n+1}."""
    if n == 1:
        return np.array([[1.0, 0.0], [-1.0, 0.0]])
    if n == 2:
        ang = 2.0 * np.pi * np.arange(m) / m
        return np.column_stack([np.cos(ang), np.sin(ang), np.zeros(m)])
    raise ParameterError("equator sampling implemented for n <= 2")


def equator_integral_poly(poly, n: int) -> float:
    """Exact integral of a polynomial trace over the equatorial sphere.

    dH^0 on two points for n=1; closed-form circle moments for n=2.
    Monomials with a positive y-exponent vanish on the equator.
    """
    total = 0.0
    for exps, c in poly.coeffs.items():
        if exps[-1] != 0:
            continue
        c = float(c)
        if n == 1:
            i = exps[0]
            total += c * (1.0 + (-1.0) ** i)
        else:
            total += c * sphere_moment(exps[:-1], 0.0)
    return total


def negative_side_integral_poly(poly, e: np.ndarray, power: float, n: int) -> float:
    """Exact  int_{equator} p(theta') * ((theta' . e)_-)^power dH^{n-1}  for polynomial p.

    n=1: the equator is two points and only theta' = -e contributes.
    n=2: rotate to an e-aligned angle xi with theta'.e = cos(xi), expand the
    trace into cos^i sin^j monomials, and use Beta-function moments of
    |cos|^{power} over the half circle (odd sin powers cancel).
    """
    e = np.asarray(e, dtype=float)
    if n == 1:
        pt = np.array([[-e[0], 0.0]])
        return float(poly.evaluate(pt)[0])
    # collect the trace as a polynomial in (C, S) = (cos xi, sin xi)
    cs: dict[tuple[int, int], float] = {}
    for exps, coef in poly.coeffs.items():
        if exps[-1] != 0:
            continue
        coef = float(coef)
        i, j = exps[0], exps[1]
        # x1 = C e1 - S e2, x2 = C e2 + S e1
        terms = {(0, 0): coef}
        for _ in range(i):
            terms = _cs_mul(terms, {(1, 0): e[0], (0, 1): -e[1]})
        for _ in range(j):
            terms = _cs_mul(terms, {(1, 0): e[1], (0, 1): e[0]})
        for key, v in terms.items():
            cs[key] = cs.get(key, 0.0) + v
    total = 0.0
    for (pc, qs), coef in cs.items():
        if qs % 2:
            continue
        # int over {cos xi < 0} of |cos|^{pc+power} sin^{qs}, cos^{pc} sign (-1)^pc
        b = math.exp(math.lgamma(0.5 * (pc + power + 1.0)) + math.lgamma(0.5 * (qs + 1.0))
                     - math.lgamma(0.5 * (pc + power + qs + 2.0)))
        total += coef * (-1.0) ** pc * b
    return total


def _cs_mul(t1: dict, t2: dict) -> dict:
    out: dict[tuple[int, int], float] = {}
    for (a1, b1), c1 in t1.items():
        for (a2, b2), c2 in t2.items():
            key = (a1 + a2, b1 + b2)
            out[key] = out.get(key, 0.0) + c1 * c2
    return out


def negative_side_rule(n: int, e: np.ndarray, power: float, k: int = 80):
    """Quadrature for int_{equator} g(theta') ((theta'.e)_-)^power dH^{n-1}, general g.

    Used for non-polynomial traces; polynomial traces go through
    `negative_side_integral_poly` instead.
    """
    e = np.asarray(e, dtype=float)
    if n == 1:
        return np.array([[-e[0], 0.0]]), np.array([1.0])
    u, w = jacobi_01(k, -0.5, (power - 1.0) / 2.0)
    c = np.sqrt(u)
    xi1 = np.arccos(-c)            # in (pi/2, pi)
    xi2 = 2.0 * np.pi - xi1        # in (pi, 3pi/2)
    eperp = np.array([-e[1], e[0]])
    pts, wts = [], []
    for xi in (xi1, xi2):
        direc = np.outer(np.cos(xi), e) + np.outer(np.sin(xi), eperp)
        pts.append(np.column_stack([direc, np.zeros(len(xi))]))
        wts.append(0.5 * w)
    return np.vstack(pts), np.concatenate(wts)

"""Closed-form model solutions and polynomial constructions.

* RegularProfile: the (1+s)-homogeneous half-space solution

      (t/s - R) (R + t)^s,   t = x.e,  R = sqrt(t^2 + y^2),

  vanishing on the contact half {t <= 0, y = 0}, with weighted Neumann
  trace -c_s |t|^{1-s} there, c_s = 2^{1-s} (1+s).

* AxisProfile: the pure-y profiles |y|^p; p = 1+s and p = 2s are the two
  that enter the competitor constructions (-|y|^{2s} solves the
  zero-obstacle problem, |y|^{1+s} has a nonzero interior source).

* unit_equator_polynomial: the degree-2m weighted-harmonic polynomial
  with trace identically 1 on the equatorial sphere, from the rational
  two-term recurrence in its y^{2k} |x|^{2(m-k)} expansion.

* extend_harmonic: the unique even weighted-harmonic polynomial
  extension of a polynomial in x, via p_{j+1} = -Lap_x p_j / ((2j+2)(2j+1+a)).

* reduce_obstacle: subtract the Taylor polynomial of the obstacle and
  its harmonic extension, leaving a zero-obstacle problem with a small
  interior source h = Lap_x(phi - taylor).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .params import ParameterError, Params
from .polys import Poly


@dataclass(frozen=True)
class RegularProfile:
    e: tuple
    s: float

    def __post_init__(self):
        e = np.asarray(self.e, dtype=float)
        if abs(np.linalg.norm(e) - 1.0) > 1e-12:
            raise ParameterError(f"direction must be a unit vector, got {self.e}")

    @property
    def homogeneity(self) -> float:
        return 1.0 + self.s

    def neumann_constant(self) -> float:
        return 2.0 ** (1.0 - self.s) * (1.0 + self.s)

    def values(self, points: np.ndarray) -> np.ndarray:
        """Evaluate at ambient points (N, n+1); total formula, even in y."""
        pts = np.asarray(points, dtype=float)
        e = np.asarray(self.e, dtype=float)
        t = pts[:, :-1] @ e
        y = pts[:, -1]
        r = np.hypot(t, y)
        base = np.maximum(r + t, 0.0)
        return (t / self.s - r) * base**self.s

    def gradient_values(self, points: np.ndarray) -> np.ndarray:
        """Ambient gradient; valid away from the contact half-plane."""
        pts = np.asarray(points, dtype=float)
        e = np.asarray(self.e, dtype=float)
        t = pts[:, :-1] @ e
        y = pts[:, -1]
        r = np.hypot(t, y)
        base = np.maximum(r + t, 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            inv_r = np.where(r > 0.0, 1.0 / r, 0.0)
            pow_s = base**self.s
            pow_sm1 = np.where(base > 0.0, base ** (self.s - 1.0), 0.0)
        dt = (1.0 / self.s - t * inv_r) * pow_s \
            + (t / self.s - r) * self.s * pow_sm1 * (t * inv_r + 1.0)
        dy = (-y * inv_r) * pow_s + (t / self.s - r) * self.s * pow_sm1 * (y * inv_r)
        grad = np.zeros_like(pts)
        grad[:, :-1] = dt[:, None] * e[None, :]
        grad[:, -1] = dy
        return grad

    def neumann_trace(self, x: np.ndarray) -> np.ndarray:
        """lim_{y->0+} y^a dv/dy on {y=0}: -c_s |x.e|^{1-s} where x.e < 0, else 0."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        t = x @ np.asarray(self.e, dtype=float)
        out = np.where(t < 0.0, -self.neumann_constant() * np.abs(t) ** (1.0 - self.s), 0.0)
        return out


@dataclass(frozen=True)
class AxisProfile:
    """|y|^power, restricted to the sphere as |theta_{n+1}|^power."""

    power: float

    @property
    def homogeneity(self) -> float:
        return self.power

    def values(self, points: np.ndarray) -> np.ndarray:
        return np.abs(np.asarray(points, dtype=float)[:, -1]) ** self.power

    def gradient_values(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        grad = np.zeros_like(pts)
        y = pts[:, -1]
        grad[:, -1] = self.power * np.abs(y) ** (self.power - 1.0) * np.sign(y)
        return grad


def y_plus_profile(p: Params) -> AxisProfile:
    """|y|^{1+s}: interior source (1+s)(1-s)|y|^{s-1} under the weighted operator."""
    return AxisProfile(1.0 + p.s)


def y_flat_profile(p: Params) -> AxisProfile:
    """|y|^{2s}: weighted-harmonic off {y=0}; its negative solves the zero-obstacle problem."""
    return AxisProfile(2.0 * p.s)


def unit_equator_polynomial(p: Params, m: int) -> Poly:
    """Degree-2m even weighted-harmonic polynomial with trace 1 on the equator sphere."""
    if m < 1:
        raise ParameterError(f"m must be >= 1, got {m}")
    a = p.a_exact
    n = p.n
    coeffs = [Fraction(1)]
    for k in range(1, m + 1):
        den = Fraction(2 * k) * (2 * k - 1 + a)
        if den == 0:
            raise ParameterError(f"degenerate recurrence denominator at k={k}, a={p.a}")
        coeffs.append(-Fraction(2 * (m - k + 1) * (2 * (m - k) + n)) / den * coeffs[k - 1])
    r2 = Poly(n + 1)
    for i in range(n):
        exps = [0] * (n + 1)
        exps[i] = 2
        r2 = r2 + Poly.monomial(tuple(exps), Fraction(1))
    out = Poly(n + 1)
    for k in range(m + 1):
        yexp = [0] * (n + 1)
        yexp[-1] = 2 * k
        out = out + (Poly.monomial(tuple(yexp), coeffs[k]) * r2.power(m - k))
    return out


def extend_harmonic(q: Poly, p: Params) -> Poly:
    """Unique even weighted-harmonic polynomial extension of a polynomial in x.

    Each homogeneous component extends independently through
    p_{j+1} = -Lap_x p_j / ((2j+2)(2j+1+a)); the sum terminates."""
    if any(k[-1] != 0 for k in q.coeffs):
        raise ParameterError("input must be a polynomial in x only (zero y-exponent)")
    a = p.a_exact
    out = Poly(q.nvars)
    for _, comp in q.homogeneous_components().items():
        pj = comp
        j = 0
        while not pj.is_zero():
            yexp = [0] * q.nvars
            yexp[-1] = 2 * j
            out = out + pj * Poly.monomial(tuple(yexp), Fraction(1))
            den = Fraction((2 * j + 2)) * (2 * j + 1 + a)
            pj = pj.x_laplacian().scale(Fraction(-1) / den)
            j += 1
    return out


# ---------------------------------------------------------------------------
# Reduction of a smooth obstacle to the zero-obstacle form
# ---------------------------------------------------------------------------

class Obstacle:
    """Obstacle on {y=0} with pointwise values, x-Laplacian, and Taylor data.

    `taylor(x0, k)` returns {multiindex: derivative value} up to order k.
    """

    def value(self, x: np.ndarray) -> np.ndarray:  # pragma: no cover - interface
        raise NotImplementedError

    def x_laplacian(self, x: np.ndarray) -> np.ndarray:  # pragma: no cover - interface
        raise NotImplementedError

    def taylor(self, x0: np.ndarray, k: int) -> dict:  # pragma: no cover - interface
        raise NotImplementedError


class PolynomialObstacle(Obstacle):
    def __init__(self, poly: Poly):
        # poly lives in the x variables only; key length n
        self.poly = poly

    def value(self, x: np.ndarray) -> np.ndarray:
        return self.poly.evaluate(np.atleast_2d(x))

    def x_laplacian(self, x: np.ndarray) -> np.ndarray:
        lap = Poly(self.poly.nvars)
        for i in range(self.poly.nvars):
            lap = lap + self.poly.diff(i).diff(i)
        return lap.evaluate(np.atleast_2d(x))

    def taylor(self, x0: np.ndarray, k: int) -> dict:
        x0 = np.asarray(x0, dtype=float)
        shifted = _shift_poly(self.poly, x0)
        out = {tuple([0] * self.poly.nvars): 0.0}
        for exps, c in shifted.coeffs.items():
            if sum(exps) <= k:
                fact = 1.0
                for e in exps:
                    fact *= math.factorial(e)
                out[exps] = float(c) * fact
        return out


class PowerCuspObstacle(Obstacle):
    """phi(x) = c0 - amp * |x - center|^{k+gamma}: C^{k,gamma} but not C^{k+1}."""

    def __init__(self, exponent: float, center, amplitude: float = 1.0, offset: float = 0.0):
        self.exponent = float(exponent)
        self.center = np.atleast_1d(np.asarray(center, dtype=float))
        self.amplitude = float(amplitude)
        self.offset = float(offset)

    def _r(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.linalg.norm(x - self.center[None, :], axis=1)

    def value(self, x):
        return self.offset - self.amplitude * self._r(x) ** self.exponent

    def x_laplacian(self, x):
        n = self.center.size
        r = self._r(x)
        g = self.exponent
        with np.errstate(divide="ignore", invalid="ignore"):
            out = -self.amplitude * g * (g + n - 2.0) * np.where(r > 0, r ** (g - 2.0), 0.0)
        return out

    def taylor(self, x0, k):
        x0 = np.atleast_1d(np.asarray(x0, dtype=float))
        if np.allclose(x0, self.center):
            # all derivatives through order k vanish at the cusp center
            zero_key = tuple([0] * self.center.size)
            return {zero_key: self.offset}
        raise ParameterError("Taylor data of the cusp obstacle is only provided at its center")


@dataclass
class ReducedProblem:
    params: Params
    x0: np.ndarray
    k: int
    taylor_poly: Poly          # q_k, in x, centered at the origin of global coordinates
    extension: Poly            # even harmonic extension of q_k, in (x, y)
    obstacle: Obstacle
    source_constant: float     # reported C with |h(x)| <= C |x - x0|^{k+gamma-2}

    def h_values(self, x: np.ndarray) -> np.ndarray:
        """Interior source h(x) = Lap_x(phi - q_k)(x)."""
        x2 = np.atleast_2d(np.asarray(x, dtype=float))
        lap_q = Poly(self.taylor_poly.nvars)
        for i in range(self.taylor_poly.nvars):
            lap_q = lap_q + self.taylor_poly.diff(i).diff(i)
        return self.obstacle.x_laplacian(x2) - lap_q.evaluate(x2)

    def transform(self, u_values: np.ndarray, points: np.ndarray) -> np.ndarray:
        """v = u - q~_k(x, y) - (phi(x) - q_k(x)) at ambient points (N, n+1)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        x = pts[:, :-1]
        corr = self.obstacle.value(x) - self.taylor_poly.evaluate(x)
        return u_values - self.extension.evaluate(pts) - corr


def reduce_obstacle(obstacle: Obstacle, x0, k: int, p: Params,
                    gamma: float = 0.5, sample_radius: float = 0.5,
                    n_samples: int = 64) -> ReducedProblem:
    """Build the zero-obstacle transform of a C^{k,gamma} obstacle at x0."""
    if k < 2:
        raise ParameterError(f"Taylor order must be >= 2, got {k}")
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    derivs = obstacle.taylor(x0, k)
    if not derivs:
        raise ParameterError("obstacle provided no derivative data")
    n = p.n
    qk = Poly(n, {})
    for exps, dval in derivs.items():
        fact = 1.0
        for e in exps:
            fact *= math.factorial(e)
        qk = qk + Poly.monomial(tuple(exps), dval / fact)
    qk = _shift_poly_back(qk, x0)
    qk_xy = Poly(n + 1, {tuple(list(kk) + [0]): v for kk, v in qk.coeffs.items()})
    ext = extend_harmonic(qk_xy, p).to_float()

    red = ReducedProblem(params=p, x0=x0, k=k, taylor_poly=qk, extension=ext,
                         obstacle=obstacle, source_constant=0.0)
    # empirical constant in |h| <= C |x-x0|^{k+gamma-2} over a sample fan
    rng_radii = np.geomspace(1e-3, sample_radius, n_samples)
    if n == 1:
        dirs = np.array([[1.0], [-1.0]])
    else:
        ang = 2.0 * np.pi * np.arange(8) / 8
        dirs = np.column_stack([np.cos(ang), np.sin(ang)])
    cmax = 0.0
    for d in dirs:
        xs = x0[None, :] + rng_radii[:, None] * d[None, :]
        hv = red.h_values(xs)
        denom = rng_radii ** (k + gamma - 2.0)
        cmax = max(cmax, float(np.max(np.abs(hv) / denom)))
    red.source_constant = cmax
    return red


def _shift_poly(poly: Poly, x0: np.ndarray) -> Poly:
    """Rewrite p(x) as a polynomial in (x - x0)."""
    out = Poly(poly.nvars)
    for exps, c in poly.coeffs.items():
        term = Poly.constant(poly.nvars, float(c))
        for i, e in enumerate(exps):
            unit = [0] * poly.nvars
            unit[i] = 1
            base = Poly(poly.nvars, {tuple(unit): 1.0,
                                     tuple([0] * poly.nvars): float(x0[i])})
            term = term * base.power(e)
        out = out + term
    return out


def _shift_poly_back(poly: Poly, x0: np.ndarray) -> Poly:
    """Rewrite a polynomial in (x - x0) as a polynomial in x."""
    return _shift_poly(poly, -np.asarray(x0, dtype=float))

"""Eigenbasis of the weighted spherical operator on even-in-y functions.

Modes are traces of homogeneous polynomials annihilated by the weighted
ambient operator: the kernel at each degree is computed over exact
rationals, orthogonalized within its eigenspace with an exact rational
Gram matrix (the transcendental moment factor is common to a degree
class and cancels), and normalized in the weighted boundary L2 norm.
The eigenvalue at degree d is d * (d + n + a - 1).

A trace projected onto the basis becomes a coefficient vector plus an
explicit residual norm for the unrepresented part.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .moments import degree_factor, rational_moment_part
from .params import ParameterError, Params
from .polys import Poly, even_monomials, exact_nullspace
from .quadrature import SphereQuadrature


class InternalConsistencyError(RuntimeError):
    """The polynomial kernel came out smaller than the theory requires."""


class QuadratureOrderError(RuntimeError):
    """Projection produced a negative residual beyond tolerance."""


@dataclass
class EigenMode:
    degree: int
    eigenvalue: float
    poly_exact: Poly | None      # orthogonalized, unnormalized, rational
    norm: float                  # weighted boundary L2 norm of poly_exact
    trace_poly: Poly             # normalized float coefficient table

    def values(self, points: np.ndarray) -> np.ndarray:
        return self.trace_poly.evaluate(points)

    def gradient_values(self, points: np.ndarray) -> np.ndarray:
        return self.trace_poly.gradient_values(points)


@dataclass
class EigenBasis:
    params: Params
    max_degree: int
    modes: list[EigenMode]
    _matrix_cache: dict = field(default_factory=dict, repr=False)

    @property
    def size(self) -> int:
        return len(self.modes)

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([m.eigenvalue for m in self.modes])

    @property
    def degrees(self) -> np.ndarray:
        return np.array([m.degree for m in self.modes])

    def indices_of_degree(self, d: int) -> list[int]:
        return [i for i, m in enumerate(self.modes) if m.degree == d]

    @property
    def constant_index(self) -> int:
        return self.indices_of_degree(0)[0]

    @property
    def linear_indices(self) -> list[int]:
        return self.indices_of_degree(1)

    def mode_matrix(self, q: SphereQuadrature) -> np.ndarray:
        """Mode values at quadrature nodes, shape (size, n_pts); cached per rule."""
        key = id(q)
        if key not in self._matrix_cache:
            self._matrix_cache[key] = np.vstack([m.values(q.points) for m in self.modes])
        return self._matrix_cache[key]

    # -- serialization -------------------------------------------------------
    def to_json(self) -> str:
        doc = {
            "n": self.params.n,
            "a": self.params.a,
            "s": self.params.s,
            "max_degree": self.max_degree,
            "modes": [
                {
                    "degree": m.degree,
                    "eigenvalue": m.eigenvalue,
                    "coefficients": sorted(
                        [list(k) + [float(v)] for k, v in m.trace_poly.coeffs.items()]
                    ),
                }
                for m in self.modes
            ],
        }
        return json.dumps(doc, sort_keys=True, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "EigenBasis":
        doc = json.loads(text)
        p = Params.from_a(doc["n"], doc["a"])
        modes = []
        for md in doc["modes"]:
            coeffs = {tuple(int(e) for e in row[:-1]): row[-1] for row in md["coefficients"]}
            poly = Poly(p.n + 1, coeffs)
            modes.append(EigenMode(degree=md["degree"], eigenvalue=md["eigenvalue"],
                                   poly_exact=None, norm=1.0, trace_poly=poly))
        return cls(params=p, max_degree=doc["max_degree"], modes=modes)


@dataclass
class SpectralTrace:
    basis: EigenBasis
    coefficients: np.ndarray
    residual_norm: float = 0.0

    @property
    def norm_sq(self) -> float:
        """Full squared norm: represented part plus residual."""
        return float(np.dot(self.coefficients, self.coefficients)) + self.residual_norm**2

    def values(self, points: np.ndarray) -> np.ndarray:
        out = np.zeros(points.shape[0])
        for c, m in zip(self.coefficients, self.basis.modes):
            if c != 0.0:
                out += c * m.values(points)
        return out

    def restricted(self, keep) -> "SpectralTrace":
        """Copy with coefficients outside `keep` (an index mask) zeroed."""
        coefs = np.where(keep, self.coefficients, 0.0)
        return SpectralTrace(self.basis, coefs, 0.0)


def kernel_polynomials(p: Params, degree: int) -> list[Poly]:
    """Exact rational basis of even-in-y degree-d polynomials killed by the operator."""
    mons = even_monomials(p.n + 1, degree)
    if not mons:
        return []
    a = p.a_exact
    if degree < 2:
        basis_vecs = [[Fraction(1) if i == j else Fraction(0) for i in range(len(mons))]
                      for j in range(len(mons))]
    else:
        targets = even_monomials(p.n + 1, degree - 2)
        tindex = {m: i for i, m in enumerate(targets)}
        # rows: one per target monomial, columns: source monomials
        cols = []
        for mon in mons:
            img = Poly.monomial(mon, Fraction(1)).la_image(a)
            col = [Fraction(0)] * len(targets)
            for k, v in img.coeffs.items():
                col[tindex[k]] = v
            cols.append(col)
        rows = [[cols[j][i] for j in range(len(mons))] for i in range(len(targets))]
        basis_vecs = exact_nullspace(rows, len(mons))
    out = []
    for vec in basis_vecs:
        poly = Poly(p.n + 1, {m: c for m, c in zip(mons, vec) if c != 0})
        out.append(poly)
    return out


def _rational_gram(polys: list[Poly], a: Fraction) -> list[list[Fraction]]:
    g = [[Fraction(0)] * len(polys) for _ in polys]
    for i, pi in enumerate(polys):
        for j in range(i, len(polys)):
            acc = Fraction(0)
            for k1, v1 in pi.coeffs.items():
                for k2, v2 in polys[j].coeffs.items():
                    prod = tuple(e1 + e2 for e1, e2 in zip(k1, k2))
                    acc += v1 * v2 * rational_moment_part(prod, a)
            g[i][j] = acc
            g[j][i] = acc
    return g


def build_basis(p: Params, K: int) -> EigenBasis:
    """Construct all modes of degree <= K, orthonormal in the weighted L2 norm."""
    if K < 0:
        raise ParameterError(f"max degree must be >= 0, got {K}")
    a = p.a_exact
    modes: list[EigenMode] = []
    for d in range(K + 1):
        kern = kernel_polynomials(p, d)
        if not kern:
            raise InternalConsistencyError(f"empty kernel at degree {d}")
        # exact Gram-Schmidt inside the eigenspace
        orth: list[Poly] = []
        gram_prev: list[Fraction] = []
        for v in kern:
            w = v
            for u, guu in zip(orth, gram_prev):
                gq = _rational_pair(w, u, a)
                if gq != 0:
                    w = w - u.scale(gq / guu)
            gww = _rational_pair(w, w, a)
            if gww == 0:
                raise InternalConsistencyError(f"degenerate Gram at degree {d}")
            orth.append(w)
            gram_prev.append(gww)
        tfac = degree_factor(p.n, p.a, 2 * d)
        for w, gww in zip(orth, gram_prev):
            w = _canonical_sign(w)
            gww = _rational_pair(w, w, a)
            norm = float(np.sqrt(tfac * float(gww)))
            trace_poly = w.to_float().scale(1.0 / norm)
            modes.append(EigenMode(degree=d, eigenvalue=p.eigenvalue(d),
                                   poly_exact=w, norm=norm, trace_poly=trace_poly))
    return EigenBasis(params=p, max_degree=K, modes=modes)


def _rational_pair(p1: Poly, p2: Poly, a: Fraction) -> Fraction:
    acc = Fraction(0)
    for k1, v1 in p1.coeffs.items():
        for k2, v2 in p2.coeffs.items():
            prod = tuple(e1 + e2 for e1, e2 in zip(k1, k2))
            acc += v1 * v2 * rational_moment_part(prod, a)
    return acc


def _canonical_sign(poly: Poly) -> Poly:
    lead = max(poly.coeffs)  # lexicographically largest exponent tuple
    return poly.scale(-1) if poly.coeffs[lead] < 0 else poly


def project(f, basis: EigenBasis, q: SphereQuadrature,
            residual_tol: float = 1e-9) -> SpectralTrace:
    """Weighted L2 projection of an even trace onto the basis.

    `f` is a callable on sphere points or an array of nodal values
    aligned with the rule.  A negative residual square beyond tolerance
    signals that the rule cannot resolve the products and raises.
    """
    fv = f(q.points) if callable(f) else np.asarray(f, dtype=float)
    mat = basis.mode_matrix(q)
    coefs = mat @ (q.weights * fv)
    norm_sq = float(np.dot(q.weights, fv * fv))
    # Parseval route detects an under-resolved rule; the reconstruction route
    # gives the residual itself without cancellation noise.
    parseval_res = norm_sq - float(np.dot(coefs, coefs))
    scale = max(norm_sq, 1.0)
    if parseval_res < -residual_tol * scale:
        raise QuadratureOrderError(
            f"negative residual {parseval_res:.3e}; quadrature order too low for this trace")
    resid_vals = fv - coefs @ mat
    res_sq = float(np.dot(q.weights, resid_vals * resid_vals))
    return SpectralTrace(basis, coefs, float(np.sqrt(max(res_sq, 0.0))))

"""Sparse polynomial algebra in the ambient variables (x_1..x_n, y).

Coefficients are `fractions.Fraction` whenever exactness matters (kernel
solves, residual checks); float tables are produced on demand for
evaluation.  The weighted operator acts on even-in-y polynomials as

    L_a p = Delta_x p + d2/dy2 p + (a/y) d/dy p,

which maps the monomial x^k y^{2j} to
Delta_x(x^k) y^{2j} + 2j(2j-1+a) x^k y^{2j-2}, again a polynomial.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

Monomial = tuple  # exponent tuple of length n+1, last entry = y exponent


class Poly:
    __slots__ = ("nvars", "coeffs")

    def __init__(self, nvars: int, coeffs: dict | None = None):
        self.nvars = nvars
        self.coeffs: dict[Monomial, object] = {}
        if coeffs:
            for k, v in coeffs.items():
                if v != 0:
                    self.coeffs[tuple(int(e) for e in k)] = v

    # -- construction helpers ------------------------------------------------
    @classmethod
    def zero(cls, nvars: int) -> "Poly":
        return cls(nvars)

    @classmethod
    def constant(cls, nvars: int, c) -> "Poly":
        return cls(nvars, {tuple([0] * nvars): c})

    @classmethod
    def monomial(cls, exps, c=1) -> "Poly":
        exps = tuple(int(e) for e in exps)
        return cls(len(exps), {exps: c})

    def copy(self) -> "Poly":
        return Poly(self.nvars, dict(self.coeffs))

    # -- ring operations -----------------------------------------------------
    def __add__(self, other: "Poly") -> "Poly":
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            w = out.get(k, 0) + v
            if w == 0:
                out.pop(k, None)
            else:
                out[k] = w
        return Poly(self.nvars, out)

    def __sub__(self, other: "Poly") -> "Poly":
        return self + other.scale(-1)

    def scale(self, c) -> "Poly":
        if c == 0:
            return Poly(self.nvars)
        return Poly(self.nvars, {k: v * c for k, v in self.coeffs.items()})

    def __mul__(self, other: "Poly") -> "Poly":
        out: dict[Monomial, object] = {}
        for k1, v1 in self.coeffs.items():
            for k2, v2 in other.coeffs.items():
                k = tuple(a + b for a, b in zip(k1, k2))
                w = out.get(k, 0) + v1 * v2
                if w == 0:
                    out.pop(k, None)
                else:
                    out[k] = w
        return Poly(self.nvars, out)

    def power(self, m: int) -> "Poly":
        out = Poly.constant(self.nvars, 1)
        for _ in range(m):
            out = out * self
        return out

    # -- calculus ------------------------------------------------------------
    def diff(self, i: int) -> "Poly":
        out: dict[Monomial, object] = {}
        for k, v in self.coeffs.items():
            if k[i] == 0:
                continue
            kk = list(k)
            kk[i] -= 1
            out[tuple(kk)] = v * k[i]
        return Poly(self.nvars, out)

    def x_laplacian(self) -> "Poly":
        out = Poly(self.nvars)
        for i in range(self.nvars - 1):
            out = out + self.diff(i).diff(i)
        return out

    def la_image(self, a) -> "Poly":
        """Apply the weighted operator; requires evenness in y."""
        if not self.is_even_in_y():
            raise ValueError("operator defined here only for even-in-y polynomials")
        out = self.x_laplacian()
        extra: dict[Monomial, object] = {}
        for k, v in self.coeffs.items():
            j2 = k[-1]
            if j2 == 0:
                continue
            kk = list(k)
            kk[-1] -= 2
            key = tuple(kk)
            extra[key] = extra.get(key, 0) + v * j2 * (j2 - 1 + a)
        return out + Poly(self.nvars, extra)

    # -- queries ---------------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.coeffs

    def is_even_in_y(self) -> bool:
        return all(k[-1] % 2 == 0 for k in self.coeffs)

    def degree(self) -> int:
        return max((sum(k) for k in self.coeffs), default=0)

    def homogeneous_components(self) -> dict[int, "Poly"]:
        comps: dict[int, dict] = {}
        for k, v in self.coeffs.items():
            comps.setdefault(sum(k), {})[k] = v
        return {d: Poly(self.nvars, c) for d, c in sorted(comps.items())}

    def trace_y0(self) -> "Poly":
        """Restriction to {y = 0} (y-dependent monomials dropped)."""
        return Poly(self.nvars, {k: v for k, v in self.coeffs.items() if k[-1] == 0})

    def to_float(self) -> "Poly":
        return Poly(self.nvars, {k: float(v) for k, v in self.coeffs.items()})

    # -- evaluation --------------------------------------------------------------
    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Evaluate at points of shape (N, nvars)."""
        pts = np.asarray(points, dtype=float)
        out = np.zeros(pts.shape[0])
        for k, v in self.coeffs.items():
            term = np.full(pts.shape[0], float(v))
            for i, e in enumerate(k):
                if e:
                    term = term * pts[:, i] ** e
            out += term
        return out

    def gradient_values(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        out = np.zeros((pts.shape[0], self.nvars))
        for i in range(self.nvars):
            out[:, i] = self.diff(i).evaluate(pts)
        return out

    def __repr__(self) -> str:
        inner = " + ".join(f"{v}*{k}" for k, v in sorted(self.coeffs.items()))
        return f"Poly({inner or '0'})"

    def __eq__(self, other) -> bool:
        return isinstance(other, Poly) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(frozenset(self.coeffs.items()))


def even_monomials(nvars: int, degree: int) -> list[Monomial]:
    """All monomials of the given total degree with even y-exponent, lex order."""
    out: list[Monomial] = []

    def rec(prefix, remaining, slots):
        if slots == 1:
            if remaining % 2 == 0:
                out.append(tuple(prefix + [remaining]))
            return
        for e in range(remaining, -1, -1):
            rec(prefix + [e], remaining - e, slots - 1)

    rec([], degree, nvars)
    return out


def exact_nullspace(rows: list[list[Fraction]], ncols: int) -> list[list[Fraction]]:
    """Nullspace basis of a rational matrix via fraction-exact Gauss elimination.

    Returns vectors in reduced form with the free variable set to 1,
    ordered by free-column index (deterministic).
    """
    mat = [list(r) for r in rows]
    nrows = len(mat)
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        piv = None
        for rr in range(r, nrows):
            if mat[rr][c] != 0:
                piv = rr
                break
        if piv is None:
            continue
        mat[r], mat[piv] = mat[piv], mat[r]
        inv = Fraction(1, 1) / mat[r][c]
        mat[r] = [v * inv for v in mat[r]]
        for rr in range(nrows):
            if rr != r and mat[rr][c] != 0:
                f = mat[rr][c]
                mat[rr] = [v - f * w for v, w in zip(mat[rr], mat[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        vec = [Fraction(0)] * ncols
        vec[fc] = Fraction(1)
        for rr, pc in enumerate(pivots):
            vec[pc] = -mat[rr][fc]
        basis.append(vec)
    return basis

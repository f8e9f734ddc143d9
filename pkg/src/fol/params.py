"""Problem parameters shared by every module.

The ambient space is R^{n+1} with coordinates (x, y), x in R^n, y in R.
All energies are weighted by |y|^a with a = 1 - 2s, so the fractional
order s in (0, 1) and the weight exponent a in (-1, 1) determine each
other.  Desk-scale builders (quadrature, solver) accept n in {1, 2}
only; the formulas themselves are written for general n.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction


class ParameterError(ValueError):
    """Invalid (n, a, s) combination."""


@dataclass(frozen=True)
class Params:
    n: int
    a: float
    s: float

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError(f"base dimension must be >= 1, got n={self.n}")
        if not -1.0 < self.a < 1.0:
            raise ParameterError(f"weight exponent must lie in (-1, 1), got a={self.a}")
        if not 0.0 < self.s < 1.0:
            raise ParameterError(f"fractional order must lie in (0, 1), got s={self.s}")
        if abs(self.a - (1.0 - 2.0 * self.s)) > 1e-14:
            raise ParameterError(f"a = 1 - 2s violated: a={self.a}, s={self.s}")

    @classmethod
    def from_a(cls, n: int, a: float) -> "Params":
        return cls(n=n, a=float(a), s=(1.0 - float(a)) / 2.0)

    @classmethod
    def from_s(cls, n: int, s: float) -> "Params":
        return cls(n=n, a=1.0 - 2.0 * float(s), s=float(s))

    @property
    def a_exact(self) -> Fraction:
        """The weight exponent as an exact rational (the float is taken verbatim)."""
        return Fraction(self.a)

    def eigenvalue(self, alpha: float) -> float:
        """Eigenvalue map of the weighted spherical operator: alpha * (alpha + n + a - 1)."""
        if alpha < 0:
            raise ParameterError(f"homogeneity must be >= 0, got {alpha}")
        val = alpha * (alpha + self.n + self.a - 1.0)
        return val if val != 0.0 else 0.0  # normalize -0.0

    def require_desk_scale(self) -> None:
        """Quadrature builders and the grid solver are restricted to n <= 2."""
        if self.n > 2:
            raise ParameterError(f"builders accept n in {{1, 2}} only, got n={self.n}")

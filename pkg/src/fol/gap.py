"""Forbidden homogeneity intervals around 1+s and 2m.

A t-homogeneity excess above (or deficit below) the model value forces

    (1 - kappa) (1 + t/(n+2)) >= 1        (above 1+s),
    (1 + eps)   (1 + t/(n+2)) <= 1        (below 1+s),
    (1 - eps+ t^beta) (1 + t/(n+a+4m-1)) >= 1   (above 2m),
    (1 + eps-) (1 + t/(n+a+4m-1)) <= 1          (below 2m),

so the excluded widths are the smallest positive roots.  Around 1+s
both widths reduce algebraically to (1+a)/2 = 1-s; a sign slip in the
below-side chain would instead give 1+s and exclude the attainable
homogeneity 2s (the pure-|y| solution lives there), so the solver
reports both values and asserts the consistent width.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .epiperimetric import negative_regular_expansion, regular_contraction
from .params import ParameterError, Params


@dataclass
class GapResult:
    center: float
    left_width: float
    right_width: float
    derivation: dict = field(default_factory=dict)

    def excluded_intervals(self) -> list[tuple[float, float]]:
        return [(self.center - self.left_width, self.center),
                (self.center, self.center + self.right_width)]

    def to_json_dict(self) -> dict:
        return {
            "center": self.center,
            "left_width": self.left_width,
            "right_width": self.right_width,
            "excluded": self.excluded_intervals(),
            "derivation": self.derivation,
        }


def _bisect_root(f, lo: float, hi: float, tol: float = 1e-14,
                 max_iter: int = 200) -> float:
    flo, fhi = f(lo), f(hi)
    if flo * fhi > 0:
        raise ParameterError(f"no sign change on [{lo}, {hi}]")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fhi * fm <= 0:
            lo, flo = mid, fm
        else:
            hi, fhi = mid, fm
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


def gap_regular(p: Params) -> GapResult:
    """Excluded band around 1+s; both widths are (1+a)/2 = 1-s analytically."""
    kap = regular_contraction(p)
    eps = negative_regular_expansion(p)
    den = p.n + 2.0

    def above(t):
        return (1.0 - kap) * (1.0 + t / den) - 1.0

    def below(t):
        return 1.0 - (1.0 + eps) * (1.0 - t / den)

    right = _bisect_root(above, 0.0, 4.0)
    left = _bisect_root(below, 0.0, 4.0)
    closed_form = (1.0 + p.a) / 2.0
    return GapResult(
        center=1.0 + p.s, left_width=left, right_width=right,
        derivation={
            "above_inequality": "(1-kappa)(1+t/(n+2)) >= 1",
            "below_inequality": "(1+eps)(1-t/(n+2)) <= 1",
            "kappa": kap,
            "eps": eps,
            "closed_form_width": closed_form,
            "statement_left_width": closed_form,
            "literal_chain_left_width": 1.0 + p.s,
            "note": "left width asserted from the statement; the literal chain"
                    " would exclude the attainable homogeneity 2s",
        },
    )


def gap_2m(p: Params, m: int, eps_pos: float, eps_neg: float,
           beta: float | None = None) -> GapResult:
    """Excluded band around 2m from the calibrated constants."""
    if m < 1:
        raise ParameterError(f"m must be >= 1, got {m}")
    if eps_pos <= 0 or eps_neg <= 0:
        raise ParameterError("constants must be positive")
    if beta is None:
        beta = (p.n - 1.0) / (p.n + 1.0)
    den = p.n + p.a + 4.0 * m - 1.0

    def above(t):
        return (1.0 - eps_pos * t**beta) * (1.0 + t / den) - 1.0

    # above(t) ~ -eps t^beta + t/den < 0 near 0; a root <= 1 exists iff above(1) >= 0
    if above(1.0) < 0.0:
        right = 1.0  # conservative: no root below 1
    else:
        right = _bisect_root(above, 1e-12, 1.0)
    left = den * eps_neg / (1.0 + eps_neg)
    return GapResult(
        center=2.0 * m, left_width=left, right_width=right,
        derivation={
            "above_inequality": "(1-eps+ t^beta)(1+t/(n+a+4m-1)) >= 1",
            "below_closed_form": "t = (n+a+4m-1) eps/(1+eps)",
            "eps_pos": eps_pos,
            "eps_neg": eps_neg,
            "beta": beta,
        },
    )


def gap_report_json(results: list[GapResult]) -> str:
    return json.dumps([r.to_json_dict() for r in results], sort_keys=True, indent=1)

"""Weiss energies, boundary quantities, Almgren and generalized frequencies.

Spectral forms (for traces expanded in the eigenbasis):

    W_mu(r^alpha phi) = sum_k c_k^2 ((lambda_k + alpha^2)/(n+a+2alpha-1) - mu),

which at alpha = mu reduces to sum (lambda_k - lambda(mu)) c_k^2 / (n+a+2mu-1).
Quadrature forms integrate |grad v|^2 |y|^a over polar shells around a
point of {y = 0}, with the |y|^a and rho^{n+a} factors carried by the
rules, so they apply to any evaluable field (closed forms, competitor
sums, interpolated grid solutions).

Radial monitors are assembled on a geometric radii grid; r -> 0 limits
use a linear-in-r least-squares extrapolation over the smallest reliable
radii (two-level Richardson).
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .params import ParameterError, Params
from .quadrature import SphereQuadrature, build_sphere_quadrature
from .spectrum import SpectralTrace


# ---------------------------------------------------------------------------
# Spectral forms
# ---------------------------------------------------------------------------

def kappa_ratio(p: Params, alpha: float, mu: float) -> float:
    """(alpha - mu) / (alpha + mu + n + a - 1)."""
    den = alpha + mu + p.n + p.a - 1.0
    if den <= 0:
        raise ParameterError(f"degenerate denominator for alpha={alpha}, mu={mu}")
    return (alpha - mu) / den


def weiss_spectral_at(trace: SpectralTrace, alpha: float, mu: float) -> float:
    """Weiss energy W_mu of the alpha-homogeneous extension of the trace."""
    p = trace.basis.params
    den = p.n + p.a + 2.0 * alpha - 1.0
    if den <= 0:
        raise ParameterError(f"n+a+2alpha-1 must be positive, got {den}")
    lam = trace.basis.eigenvalues
    c2 = trace.coefficients**2
    return float(np.sum(c2 * ((lam + alpha**2) / den - mu)))


def weiss_spectral(trace: SpectralTrace, mu: float) -> float:
    """Weiss energy of the mu-homogeneous extension (closed spectral sum)."""
    return weiss_spectral_at(trace, mu, mu)


def weiss_cross(trace: SpectralTrace, alpha: float, mu: float) -> tuple[float, float]:
    """Both sides of the cross-homogeneity identity.

    lhs = W_mu(r^alpha c) - (1 - kappa) W_mu(r^mu c),
    rhs = kappa / (n+a+2alpha-1) * sum (lambda(alpha) - lambda_k) c_k^2,
    with kappa = kappa_ratio(alpha, mu).  The (1 + kappa_{mu,alpha})
    variant is the same statement read with the roles exchanged.
    """
    p = trace.basis.params
    kap = kappa_ratio(p, alpha, mu)
    lhs = weiss_spectral_at(trace, alpha, mu) - (1.0 - kap) * weiss_spectral(trace, mu)
    lam_a = p.eigenvalue(alpha)
    den = p.n + p.a + 2.0 * alpha - 1.0
    rhs = kap / den * float(np.sum((lam_a - trace.basis.eigenvalues)
                                   * trace.coefficients**2))
    return lhs, rhs


def weiss_shift(norm_sq: float, p: Params, mu: float, t: float) -> tuple[float, float]:
    """For a solution trace extended at mu + t: (W_mu at mu+t, W_mu at mu).

    Returns (t ||c||^2, (1 + t/(n+a+2mu-1)) t ||c||^2); the caller asserts
    that the (mu+t)-homogeneous extension solves the zero-obstacle problem.
    """
    first = t * norm_sq
    second = (1.0 + t / (p.n + p.a + 2.0 * mu - 1.0)) * first
    return first, second


# ---------------------------------------------------------------------------
# Quadrature forms for evaluable fields
# ---------------------------------------------------------------------------

def _field_gradient(v, pts: np.ndarray, step: float) -> np.ndarray:
    g = getattr(v, "gradient_values", None)
    if g is not None:
        return g(pts)
    vals = np.zeros_like(pts)
    for i in range(pts.shape[1]):
        dp = np.zeros_like(pts)
        dp[:, i] = step
        vals[:, i] = (v.values(pts + dp) - v.values(pts - dp)) / (2.0 * step)
    return vals


def radial_shell_rule(p: Params, r: float, shells: int = 40,
                      per_shell: int = 10) -> tuple[np.ndarray, np.ndarray]:
    """Composite rule for int_0^r g(rho) rho^{n+a} drho on dyadic shells.

    Robust for g with power-type behavior at 0 (mixed-homogeneity
    fields); the innermost-shell tail is dropped, which is harmless once
    rho^{n+a} g is integrable with a positive exponent.
    """
    from numpy.polynomial.legendre import leggauss

    xg, wg = leggauss(per_shell)
    rhos, ws = [], []
    hi = r
    for _ in range(shells):
        lo = hi / 2.0
        mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
        rho = mid + half * xg
        rhos.append(rho)
        ws.append(half * wg * rho ** (p.n + p.a))
        hi = lo
    return np.concatenate(rhos), np.concatenate(ws)


def dirichlet_bulk(v, p: Params, x0: np.ndarray, r: float,
                   q: SphereQuadrature, radial_k: int = 24,
                   fd_step: float | None = None) -> float:
    """int_{B_r(x0)} |grad v|^2 |y|^a dX for x0 on {y = 0}."""
    x0 = _embed(x0, p)
    rho, rw = radial_shell_rule(p, r, per_shell=max(6, radial_k // 3))
    step = fd_step if fd_step is not None else max(1e-6 * r, 1e-9)
    total = 0.0
    for rr, ww in zip(rho, rw):
        pts = x0[None, :] + rr * q.points
        grads = _field_gradient(v, pts, step)
        total += ww * q.integrate(np.sum(grads**2, axis=1))
    return total


def boundary_quantities(v, p: Params, x0, r: float, q: SphereQuadrature,
                        fd_step: float | None = None) -> tuple[float, float]:
    """(H, I): boundary mass and boundary flux at radius r around x0.

    H = int_{dB_r} v^2 |y|^a, I = int_{dB_r} v dv/dnu |y|^a; the normal
    derivative uses the analytic gradient when the field provides one.
    """
    x0 = _embed(x0, p)
    pts = x0[None, :] + r * q.points
    vals = v.values(pts)
    scale = r ** (p.n + p.a)
    h_val = scale * q.integrate(vals**2)
    step = fd_step if fd_step is not None else max(1e-6 * r, 1e-9)
    grads = _field_gradient(v, pts, step)
    dnu = np.sum(grads * q.points, axis=1)
    i_val = scale * q.integrate(vals * dnu)
    return h_val, i_val


def weiss_quadrature(v, lam: float, p: Params, x0, r: float,
                     q: SphereQuadrature | None = None, radial_k: int = 24) -> float:
    """W_lambda(r, v) about x0 by bulk + boundary quadrature."""
    if q is None:
        q = build_sphere_quadrature(p, 40)
    if r <= 0:
        raise ParameterError(f"radius must be positive, got {r}")
    bulk = dirichlet_bulk(v, p, x0, r, q, radial_k)
    h_val, _ = boundary_quantities(v, p, x0, r, q)
    return bulk / r ** (p.n + p.a + 2.0 * lam - 1.0) \
        - lam * h_val / r ** (p.n + p.a + 2.0 * lam)


def coupling_bulk(v, h_fn, p: Params, x0, r: float, q: SphereQuadrature,
                  radial_k: int = 24) -> float:
    """int_{B_r(x0)} v * h |y|^a dX for an interior source h(x) on R^n."""
    x0 = _embed(x0, p)
    rho, rw = radial_shell_rule(p, r, per_shell=max(6, radial_k // 3))
    total = 0.0
    for rr, ww in zip(rho, rw):
        pts = x0[None, :] + rr * q.points
        total += ww * q.integrate(v.values(pts) * h_fn(pts[:, :-1]))
    return total


def weiss_modified(v, h_fn, lam: float, p: Params, x0, r: float,
                   q: SphereQuadrature | None = None, radial_k: int = 24) -> float:
    """W_lambda plus the obstacle-coupling term r^{-(n+a+2lam-1)} int v h |y|^a."""
    if q is None:
        q = build_sphere_quadrature(p, 40)
    w = weiss_quadrature(v, lam, p, x0, r, q, radial_k)
    if h_fn is None:
        return w
    return w + coupling_bulk(v, h_fn, p, x0, r, q, radial_k) \
        / r ** (p.n + p.a + 2.0 * lam - 1.0)


def almgren_frequency(v, p: Params, x0, r: float, q: SphereQuadrature,
                      radial_k: int = 24) -> float:
    """N(r) = r * bulk Dirichlet energy / boundary mass; H = 0 signals degeneracy."""
    bulk = dirichlet_bulk(v, p, x0, r, q, radial_k)
    h_val, _ = boundary_quantities(v, p, x0, r, q)
    if h_val <= 0.0:
        return np.nan
    return r * bulk / h_val


# ---------------------------------------------------------------------------
# Radial profiles
# ---------------------------------------------------------------------------

@dataclass
class FrequencyProfile:
    """Radial monitor table; radii strictly decreasing."""

    params: Params
    radii: np.ndarray
    H: np.ndarray
    I: np.ndarray
    N: np.ndarray
    Phi: np.ndarray
    W: np.ndarray
    Wmod: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        cols = (self.H, self.I, self.N, self.Phi, self.W, self.Wmod)
        if any(len(c) != len(self.radii) for c in cols):
            raise ParameterError("profile column lengths disagree")
        if np.any(np.diff(self.radii) >= 0):
            raise ParameterError("radii must be strictly decreasing")
        if np.any(self.H < 0):
            raise ParameterError("boundary mass must be nonnegative")

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("r,H,I,N,Phi,W,Wmod\n")
        for i in range(len(self.radii)):
            row = (self.radii[i], self.H[i], self.I[i], self.N[i],
                   self.Phi[i], self.W[i], self.Wmod[i])
            buf.write(",".join(f"{v:.17g}" for v in row) + "\n")
        return buf.getvalue()


def geometric_radii(r_max: float, ratio: float = 0.9, count: int = 40,
                    r_min: float | None = None) -> np.ndarray:
    radii = r_max * ratio ** np.arange(count)
    if r_min is not None:
        radii = radii[radii >= r_min]
    return radii


def log_derivative(radii: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Centered d log f / d r on a decreasing radii grid (one-sided at the ends)."""
    lr = np.log(radii)
    lv = np.log(values)
    out = np.gradient(lv, lr)
    return out / radii


def generalized_frequency(radii: np.ndarray, H: np.ndarray, p: Params,
                          C: float, pexp: float, k: int, gamma: float) -> np.ndarray:
    """(r + C r^{1+p}) d/dr log max(H(r), r^{n+a+2(k+gamma-p)})."""
    floor = radii ** (p.n + p.a + 2.0 * (k + gamma - pexp))
    truncated = np.maximum(H, floor)
    dlog = log_derivative(radii, truncated)
    return (radii + C * radii ** (1.0 + pexp)) * dlog


def calibrate_frequency_constant(radii: np.ndarray, H: np.ndarray, p: Params,
                                 pexp: float, k: int, gamma: float,
                                 tol: float | None = None) -> float:
    """Smallest dyadic C >= 0 making the generalized frequency nondecreasing.

    The monotonicity constant is instance-dependent; 0 is tried first
    (exact data), then 2^j for j = -10..20.  Returns inf if none works.
    """
    order = np.argsort(radii)  # ascending for the monotonicity scan
    for cand in [0.0] + [2.0**j for j in range(-10, 21)]:
        phi = generalized_frequency(radii, H, p, cand, pexp, k, gamma)
        eps = tol if tol is not None else 1e-12 * float(np.max(np.abs(phi)))
        diffs = np.diff(phi[order])
        if np.all(diffs >= -eps):
            return cand
    return float("inf")


def monotone_up_to_fd_error(radii: np.ndarray, values: np.ndarray,
                            factor: float = 10.0) -> bool:
    """Nondecreasing in r up to `factor` times a local curvature noise proxy.

    The proxy is the magnitude of the second difference, which vanishes
    for smooth monotone data and matches the noise floor for flat data.
    """
    order = np.argsort(radii)
    v = np.asarray(values, dtype=float)[order]
    if len(v) < 3:
        return True
    second = np.abs(np.diff(v, 2))
    local = np.maximum(np.concatenate([[second[0]], second]),
                       np.concatenate([second, [second[-1]]]))
    eps_floor = 1e-12 * float(np.max(np.abs(v)) + 1.0)
    diffs = np.diff(v)
    return bool(np.all(diffs >= -(factor * local + eps_floor)))


def extrapolate_to_zero(radii: np.ndarray, values: np.ndarray, npts: int = 6,
                        drop_smallest: int = 0) -> float:
    """Linear-in-r least squares over the smallest radii; returns the intercept.

    `drop_smallest` excludes innermost points (useful when they carry a
    one-sided differencing stencil).
    """
    order = np.argsort(radii)
    if drop_smallest and len(order) > drop_smallest + 2:
        order = order[drop_smallest:]
    idx = order[:max(2, min(npts, len(order)))]
    r_s, v_s = radii[idx], values[idx]
    good = np.isfinite(v_s)
    if good.sum() < 2:
        return float("nan")
    coef = np.polyfit(r_s[good], v_s[good], 1)
    return float(coef[1])


def build_profile(v, p: Params, x0, radii: np.ndarray, q: SphereQuadrature,
                  lam: float, h_fn=None, phi_constant: float = 0.0,
                  pexp: float = 0.5, k: int = 2, gamma: float = 0.5,
                  radial_k: int = 24, fd_step: float | None = None) -> FrequencyProfile:
    """Assemble the radial monitor table for a field around a free-boundary point."""
    radii = np.asarray(sorted(radii, reverse=True), dtype=float)
    Hs, Is, Ns, Ws, Wm = [], [], [], [], []
    for r in radii:
        h_val, i_val = boundary_quantities(v, p, x0, r, q, fd_step=fd_step)
        bulk = dirichlet_bulk(v, p, x0, r, q, radial_k, fd_step=fd_step)
        couple = coupling_bulk(v, h_fn, p, x0, r, q, radial_k) if h_fn else 0.0
        Hs.append(h_val)
        Is.append(i_val)
        Ns.append(r * bulk / h_val if h_val > 0 else np.nan)
        w = bulk / r ** (p.n + p.a + 2.0 * lam - 1.0) \
            - lam * h_val / r ** (p.n + p.a + 2.0 * lam)
        Ws.append(w)
        Wm.append(w + couple / r ** (p.n + p.a + 2.0 * lam - 1.0))
    Hs = np.array(Hs)
    phi = generalized_frequency(radii, Hs, p, phi_constant, pexp, k, gamma)
    return FrequencyProfile(params=p, radii=radii, H=Hs, I=np.array(Is),
                            N=np.array(Ns), Phi=phi, W=np.array(Ws),
                            Wmod=np.array(Wm),
                            meta={"lambda": lam, "C": phi_constant, "p": pexp,
                                  "k": k, "gamma": gamma})


def _embed(x0, p: Params) -> np.ndarray:
    """Lift a base point of R^n to (x0, 0) in R^{n+1} if needed."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if x0.size == p.n:
        return np.concatenate([x0, [0.0]])
    if x0.size == p.n + 1:
        if abs(x0[-1]) > 1e-14:
            raise ParameterError("monitor center must lie on {y = 0}")
        return x0
    raise ParameterError(f"bad center dimension {x0.size}")

"""Bilinear pairing engine for traces built from modes and model profiles.

Competitor energies involve sums of components f extended homogeneously,
v = sum_i c_i r^{mu_i} f_i(theta).  For such sums, with
M(f,g) = int_{S} f g |y|^a dH and G(f,g) = int_S grad_S f . grad_S g |y|^a dH,

    int_{B_1} grad(r^mu f) . grad(r^nu g) |y|^a dX
        = (mu nu M(f,g) + G(f,g)) / (n + a + mu + nu - 1),

so Weiss energies of arbitrary mixed-homogeneity sums reduce to the two
intrinsic pairings.  G is never integrated directly when a profile is
involved: integrating the ambient operator by parts at the profile's
natural homogeneity gives

    G(f,g) = (n+a+muF+muG-1) * (muF*M(f,g) - T(f,g)) - muF*muG*M(f,g),

where T(f,g) = int_{B_1} (r^{muG} g) L_a(natural extension of f) |y|^a dX
carries only bounded integrands:

  * half-space profile: contact-set flux against ((theta'.e)_-)^{1-s};
  * |y|^{1+s}: interior source against the |y|^{-s} sphere weight;
  * |y|^{2s}: an equatorial mass term.

The same identities give the profile-mode masses exactly, so the only
quadrature scalars left are the three profile-profile masses, computed
once per parameter set on a heavy rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .moments import axis_moment, sphere_moment
from .params import Params
from .profiles import AxisProfile, RegularProfile
from .quadrature import (SphereQuadrature, build_sphere_quadrature,
                         equator_integral_poly, negative_side_integral_poly)
from .spectrum import EigenBasis, SpectralTrace

HEAVY_ORDER = {1: 340, 2: 170}  # profile-profile masses carry |y|^s-type cusps


class Component:
    natural_homogeneity: float

    def natural_values(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def natural_gradient(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError


@dataclass
class ModeVector(Component):
    """Finite combination of eigenmodes; each mode extends at its own degree."""

    basis: EigenBasis
    coefficients: np.ndarray

    @classmethod
    def from_trace(cls, trace: SpectralTrace) -> "ModeVector":
        return cls(trace.basis, np.asarray(trace.coefficients, dtype=float))

    def natural_values(self, pts: np.ndarray) -> np.ndarray:
        out = np.zeros(pts.shape[0])
        for c, m in zip(self.coefficients, self.basis.modes):
            if c != 0.0:
                out += c * m.values(pts)
        return out

    def natural_gradient(self, pts: np.ndarray) -> np.ndarray:
        out = np.zeros_like(np.asarray(pts, dtype=float))
        for c, m in zip(self.coefficients, self.basis.modes):
            if c != 0.0:
                out += c * m.gradient_values(pts)
        return out


@dataclass
class HalfSpaceComponent(Component):
    profile: RegularProfile

    @property
    def natural_homogeneity(self) -> float:
        return self.profile.homogeneity

    def natural_values(self, pts):
        return self.profile.values(pts)

    def natural_gradient(self, pts):
        return self.profile.gradient_values(pts)


@dataclass
class AxisComponent(Component):
    profile: AxisProfile

    @property
    def natural_homogeneity(self) -> float:
        return self.profile.homogeneity

    def natural_values(self, pts):
        return self.profile.values(pts)

    def natural_gradient(self, pts):
        return self.profile.gradient_values(pts)


@dataclass
class Term:
    coef: float
    comp: Component
    homogeneity: float


class PairingContext:
    def __init__(self, p: Params, basis: EigenBasis):
        self.p = p
        self.basis = basis
        self._cache: dict = {}

    # ------------------------------------------------------------------ rules
    def _heavy_rule(self, weight_exponent: float) -> SphereQuadrature:
        key = ("rule", round(weight_exponent, 14))
        if key not in self._cache:
            self._cache[key] = build_sphere_quadrature(
                self.p, HEAVY_ORDER[self.p.n], weight_exponent=weight_exponent)
        return self._cache[key]

    # ------------------------------------------------- profile-profile masses
    def profile_mass(self, kind1: str, kind2: str) -> float:
        key = ("pm",) + tuple(sorted((kind1, kind2)))
        if key in self._cache:
            return self._cache[key]
        p = self.p
        power = {"plus": 1.0 + p.s, "flat": 2.0 * p.s}
        if {kind1, kind2} <= {"plus", "flat"}:
            val = axis_moment(p.n, power[kind1] + power[kind2] + p.a)
        elif kind1 == kind2 == "half":
            val = self._half_scalar(0.0, 2)
        else:
            other = kind1 if kind2 == "half" else kind2
            val = self._half_scalar(power[other], 1)
        self._cache[key] = val
        return val

    def _half_scalar(self, q_extra: float, hpow: int) -> float:
        """int_S h^{hpow} |theta_y|^{q_extra} |theta_y|^a dH for the half-space profile.

        The profile depends on (x.e, y) only, so in (x.e, y)-polar
        coordinates the integral splits into a Beta-function radial factor
        (empty for n=1) times a circle integral handled by the tailored
        Jacobi rule; both converge geometrically.
        """
        p = self.p
        circ = _half_scalar_circle(p, q_extra, hpow, k=120)
        if p.n == 1:
            return circ
        expo = (1.0 + p.s) * hpow + p.a + q_extra + 1.0
        radial = 0.5 * math.exp(math.lgamma(0.5 * (expo + 1.0)) + math.lgamma(0.5)
                                - math.lgamma(0.5 * (expo + 2.0)))
        return 2.0 * radial * circ

    def profile_mass_budget(self) -> float:
        """Uncertainty estimate for the quadrature-backed profile masses."""
        key = ("pm_budget",)
        if key not in self._cache:
            val = 0.0
            for q_extra, hpow in ((0.0, 2), (1.0 + self.p.s, 1), (2.0 * self.p.s, 1)):
                c = _half_scalar_circle(self.p, q_extra, hpow, k=60)
                f = _half_scalar_circle(self.p, q_extra, hpow, k=120)
                val = max(val, abs(c - f))
            self._cache[key] = val
        return self._cache[key]

    # -------------------------------------------------- functionals of traces
    def equator_mass(self, comp: Component) -> float:
        """A(f) = int over the equatorial sphere of f, plain measure."""
        if isinstance(comp, AxisComponent):
            return 0.0
        if isinstance(comp, HalfSpaceComponent):
            key = ("Ah",)
            if key not in self._cache:
                s = self.p.s
                c0 = (1.0 / s - 1.0) * 2.0**s  # trace (1/s-1) 2^s t^{1+s} on {t>0}
                if self.p.n == 1:
                    val = c0
                else:
                    val = c0 * math.exp(math.lgamma(0.5 * (2.0 + s)) + math.lgamma(0.5)
                                        - math.lgamma(0.5 * (3.0 + s)))
                self._cache[key] = val
            return self._cache[key]
        if isinstance(comp, ModeVector):
            return float(np.dot(comp.coefficients, self._mode_equator_masses()))
        raise TypeError(type(comp))

    def _mode_equator_masses(self) -> np.ndarray:
        key = ("Amodes",)
        if key not in self._cache:
            self._cache[key] = np.array(
                [equator_integral_poly(m.trace_poly, self.p.n) for m in self.basis.modes])
        return self._cache[key]

    def _mode_source_weights(self) -> np.ndarray:
        key = ("Smodes",)
        if key not in self._cache:
            vals = []
            for m in self.basis.modes:
                acc = 0.0
                for exps, c in m.trace_poly.coeffs.items():
                    acc += float(c) * sphere_moment(exps, -self.p.s)
                vals.append(acc)
            self._cache[key] = np.array(vals)
        return self._cache[key]

    def _mode_contact_fluxes(self, e: np.ndarray) -> np.ndarray:
        e = np.asarray(e, dtype=float)
        if self.p.n == 1:
            key = ("Bmodes", float(np.sign(e[0])))
            if key not in self._cache:
                self._cache[key] = np.array(
                    [negative_side_integral_poly(m.trace_poly, e, 1.0 - self.p.s, 1)
                     for m in self.basis.modes])
            return self._cache[key]
        # n = 2: B_e(mode) is a trigonometric polynomial of the direction angle
        # (a convolution of the mode's equator trace), so a one-time FFT table
        # evaluates it for every direction
        key = ("Bfourier",)
        if key not in self._cache:
            mcount = 2 * self.basis.max_degree + 6
            angles = 2.0 * np.pi * np.arange(mcount) / mcount
            table = np.zeros((self.basis.size, mcount))
            for j, tau in enumerate(angles):
                ee = np.array([np.cos(tau), np.sin(tau)])
                for k, m in enumerate(self.basis.modes):
                    table[k, j] = negative_side_integral_poly(
                        m.trace_poly, ee, 1.0 - self.p.s, 2)
            self._cache[key] = (mcount, np.fft.rfft(table, axis=1) / mcount)
        mcount, coeffs = self._cache[key]
        tau_e = np.arctan2(e[1], e[0])
        freqs = np.arange(coeffs.shape[1])
        phases = np.exp(1j * freqs * tau_e)
        # real series: c_0 + 2 Re sum_{k>=1} c_k e^{i k tau}; Nyquist term absent
        vals = coeffs[:, 0].real + 2.0 * np.real(coeffs[:, 1:] @ phases[1:])
        return vals

    def contact_flux_integral(self, comp: Component, e: np.ndarray) -> float:
        """B_e(f) = int over the equator of f(theta') ((theta'.e)_-)^{1-s}."""
        if isinstance(comp, AxisComponent):
            return 0.0
        if isinstance(comp, HalfSpaceComponent):
            if np.allclose(np.asarray(comp.profile.e, dtype=float), np.asarray(e, dtype=float)):
                return 0.0  # the profile vanishes on its own contact half
            raise ValueError("contact flux of a half-space profile requires an aligned direction")
        if isinstance(comp, ModeVector):
            return float(np.dot(comp.coefficients, self._mode_contact_fluxes(e)))
        raise TypeError(type(comp))

    def source_weight_integral(self, comp: Component) -> float:
        """S(f) = int_S f |theta_y|^{-s} dH."""
        p = self.p
        if isinstance(comp, AxisComponent):
            return axis_moment(p.n, comp.profile.power - p.s)
        if isinstance(comp, HalfSpaceComponent):
            return 0.0  # Green identity against |y|^{1+s} at equal homogeneity
        if isinstance(comp, ModeVector):
            return float(np.dot(comp.coefficients, self._mode_source_weights()))
        raise TypeError(type(comp))

    # ------------------------------------------------------ profile-mode rows
    def profile_mode_masses(self, prof: Component) -> np.ndarray:
        """<prof, phi_k> for every mode, via the Green identity (exact)."""
        p = self.p
        degs = self.basis.degrees.astype(float)
        if isinstance(prof, HalfSpaceComponent):
            cs = prof.profile.neumann_constant()
            e = np.asarray(prof.profile.e, dtype=float)
            be = self._mode_contact_fluxes(e)
            return -2.0 * cs * be / ((1.0 + p.s - degs) * (p.n + degs + 1.0 - p.s))
        if isinstance(prof, AxisComponent):
            if self._kind(prof) == "plus":
                sv = self._mode_source_weights()
                return (1.0 + p.s) * (1.0 - p.s) * sv / (
                    (1.0 + p.s - degs) * (p.n + degs + 1.0 - p.s))
            av = self._mode_equator_masses()
            out = np.zeros_like(av)
            even = (self.basis.degrees % 2 == 0)
            # odd modes pair to zero against axisymmetric even profiles
            out[even] = 4.0 * p.s * av[even] / ((2.0 * p.s - degs[even]) * (p.n + degs[even]))
            return out
        raise TypeError(type(prof))

    def _kind(self, comp: Component) -> str:
        if isinstance(comp, HalfSpaceComponent):
            return "half"
        if isinstance(comp, AxisComponent):
            return "plus" if abs(comp.profile.power - (1.0 + self.p.s)) < 1e-12 else "flat"
        raise TypeError(type(comp))

    # ---------------------------------------------------------------- pairings
    def mass(self, c1: Component, c2: Component) -> float:
        if isinstance(c1, ModeVector) and isinstance(c2, ModeVector):
            return float(np.dot(c1.coefficients, c2.coefficients))
        if isinstance(c1, ModeVector):
            return float(np.dot(c1.coefficients, self.profile_mode_masses(c2)))
        if isinstance(c2, ModeVector):
            return float(np.dot(c2.coefficients, self.profile_mode_masses(c1)))
        return self.profile_mass(self._kind(c1), self._kind(c2))

    def _la_term(self, f: Component, g: Component, mu_g: float) -> float:
        """T(f,g) = int_{B_1} r^{mu_g} g L_a(natural extension of f) |y|^a dX."""
        p = self.p
        if isinstance(f, HalfSpaceComponent):
            cs = f.profile.neumann_constant()
            be = self.contact_flux_integral(g, np.asarray(f.profile.e, dtype=float))
            return -2.0 * cs * be / (p.n + mu_g + 1.0 - p.s)
        if isinstance(f, AxisComponent):
            if self._kind(f) == "plus":
                return (1.0 + p.s) * (1.0 - p.s) * self.source_weight_integral(g) / (
                    p.n + mu_g + 1.0 - p.s)
            return 4.0 * p.s * self.equator_mass(g) / (p.n + mu_g)
        raise TypeError(type(f))

    def grad(self, c1: Component, c2: Component) -> float:
        """Intrinsic pairing int_S grad_S f . grad_S g |y|^a dH."""
        p = self.p
        if isinstance(c1, ModeVector) and isinstance(c2, ModeVector):
            lam = self.basis.eigenvalues
            return float(np.sum(lam * c1.coefficients * c2.coefficients))
        if isinstance(c1, ModeVector) or isinstance(c2, ModeVector):
            modes, prof = (c1, c2) if isinstance(c1, ModeVector) else (c2, c1)
            row = self.profile_mode_masses(prof)
            return float(np.sum(self.basis.eigenvalues * modes.coefficients * row))
        mu_f = c1.natural_homogeneity
        mu_g = c2.natural_homogeneity
        m = self.mass(c1, c2)
        e_val = mu_f * m - self._la_term(c1, c2, mu_g)
        return (p.n + p.a + mu_f + mu_g - 1.0) * e_val - mu_f * mu_g * m

    # ---------------------------------------------------------------- energies
    def bulk(self, t1: Term, t2: Term) -> float:
        """int_{B_1} grad(r^{mu1} f1) . grad(r^{mu2} f2) |y|^a dX."""
        p = self.p
        m = self.mass(t1.comp, t2.comp)
        g = self.grad(t1.comp, t2.comp)
        return (t1.homogeneity * t2.homogeneity * m + g) / (
            p.n + p.a + t1.homogeneity + t2.homogeneity - 1.0)

    def weiss_energy(self, terms: list[Term], lam: float) -> float:
        """Weiss energy at radius 1 of sum_i c_i r^{mu_i} f_i."""
        total = 0.0
        for t1 in terms:
            if t1.coef == 0.0:
                continue
            for t2 in terms:
                if t2.coef == 0.0:
                    continue
                total += t1.coef * t2.coef * (
                    self.bulk(t1, t2) - lam * self.mass(t1.comp, t2.comp))
        return total

    def values(self, terms: list[Term], pts: np.ndarray) -> np.ndarray:
        """Pointwise values of the mixed-homogeneity sum at ambient points."""
        pts = np.asarray(pts, dtype=float)
        r = np.linalg.norm(pts, axis=1)
        out = np.zeros(pts.shape[0])
        for t in terms:
            if t.coef == 0.0:
                continue
            if isinstance(t.comp, ModeVector):
                for c, m, d in zip(t.comp.coefficients, self.basis.modes, self.basis.degrees):
                    if c != 0.0:
                        out += t.coef * c * _safe_pow(r, t.homogeneity - d) * m.values(pts)
            else:
                beta = t.homogeneity - t.comp.natural_homogeneity
                out += t.coef * _safe_pow(r, beta) * t.comp.natural_values(pts)
        return out


def _safe_pow(r: np.ndarray, beta: float) -> np.ndarray:
    if abs(beta) < 1e-14:
        return np.ones_like(r)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(r > 0.0, r**beta, 0.0)


class TermField:
    """Evaluable field sum_i c_i r^{mu_i} f_i with analytic gradients.

    grad(r^beta F) = beta r^{beta-2} X F + r^beta grad F for each component
    at its natural homogeneity (beta = assigned - natural).
    """

    def __init__(self, ctx: PairingContext, terms: list[Term]):
        self.ctx = ctx
        self.terms = terms

    def values(self, pts: np.ndarray) -> np.ndarray:
        return self.ctx.values(self.terms, pts)

    def gradient_values(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        r = np.linalg.norm(pts, axis=1)
        out = np.zeros_like(pts)
        for t in self.terms:
            if t.coef == 0.0:
                continue
            if isinstance(t.comp, ModeVector):
                pieces = [(c, m.trace_poly, float(d)) for c, m, d in
                          zip(t.comp.coefficients, self.ctx.basis.modes,
                              self.ctx.basis.degrees) if c != 0.0]
                for c, poly, d in pieces:
                    beta = t.homogeneity - d
                    vals = poly.evaluate(pts)
                    grads = poly.gradient_values(pts)
                    out += t.coef * c * (
                        beta * _safe_pow(r, beta - 2.0)[:, None] * pts * vals[:, None]
                        + _safe_pow(r, beta)[:, None] * grads)
            else:
                beta = t.homogeneity - t.comp.natural_homogeneity
                vals = t.comp.natural_values(pts)
                grads = t.comp.natural_gradient(pts)
                out += t.coef * (
                    beta * _safe_pow(r, beta - 2.0)[:, None] * pts * vals[:, None]
                    + _safe_pow(r, beta)[:, None] * grads)
        return out


def _half_scalar_circle(p: Params, q_extra: float, hpow: int, k: int) -> float:
    """Circle integral of h^{hpow} |y|^{q_extra + a} for the half-space profile.

    Parametrize the y > 0 half circle by the angle tau from the e-axis.
    The integrand is tau^{a+q} (pi - tau)^{a+q+2s*hpow} times a factor
    analytic on [0, pi] (the profile vanishes to order 2s at tau = pi),
    so a single Jacobi rule in tau/pi converges geometrically.
    """
    from .quadrature import jacobi_01

    s = p.s
    beta = p.a + q_extra            # tau = 0 endpoint
    alpha = p.a + q_extra + 2.0 * s * hpow  # tau = pi endpoint
    v, w = jacobi_01(k, alpha, beta)
    tau = np.pi * v
    ct = np.cos(tau)
    sin_factor = (np.sin(tau) / (tau * (np.pi - tau))) ** (p.a + q_extra)
    core = (ct / s - 1.0) ** hpow * ((1.0 + ct) / (np.pi - tau) ** 2) ** (s * hpow)
    g = sin_factor * core
    return 2.0 * np.pi ** (alpha + beta + 1.0) * float(np.dot(w, g))

"""The acceptance suite: one callable per criterion, shared by the CLI
`verify-all` command and the test suite.

Each criterion returns a result record with a pass flag, runtime, and a
human-readable detail string.  `quick=True` shrinks corpus sizes and
grids for the smoke/determinism run; the full run uses the stated sizes.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .epiperimetric import (EpiContext, StructuredTrace, calibrate_epsilons,
                            check_epi_log, check_epi_negative_2m,
                            check_epi_negative_regular, check_epi_regular,
                            negative_regular_expansion,
                            random_admissible_trace, regular_contraction)
from .gap import gap_2m, gap_regular
from .pairing import (AxisComponent, HalfSpaceComponent, ModeVector, Term,
                      TermField)
from .params import Params
from .profiles import (PowerCuspObstacle, RegularProfile, extend_harmonic,
                       reduce_obstacle, unit_equator_polynomial, y_flat_profile)
from .quadrature import build_sphere_quadrature
from .spectrum import SpectralTrace, project
from .weiss import (extrapolate_to_zero, kappa_ratio, weiss_cross,
                    weiss_quadrature, weiss_spectral, weiss_spectral_at)

CONFIGS = [(1, -0.5), (1, 0.0), (1, 0.5), (2, -0.5), (2, 0.0), (2, 0.5)]

_ctx_cache: dict = {}
_sol_cache: dict = {}


def _ctx(n: int, a: float) -> EpiContext:
    key = (n, round(a, 14))
    if key not in _ctx_cache:
        _ctx_cache[key] = EpiContext.for_params(Params.from_a(n, a))
    return _ctx_cache[key]


@dataclass
class CriterionResult:
    cid: int
    name: str
    passed: bool
    runtime: float
    details: str
    data: dict = field(default_factory=dict)

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] criterion {self.cid:2d} ({self.runtime:6.1f}s): {self.name} -- {self.details}"


def _timed(cid, name, fn):
    t0 = time.time()
    passed, details, data = fn()
    return CriterionResult(cid=cid, name=name, passed=bool(passed),
                           runtime=time.time() - t0, details=details, data=data)


# ---------------------------------------------------------------------------

def criterion_1_spectral_identities(quick: bool = False, seed: int = 2026) -> CriterionResult:
    def run():
        count = 50 if quick else 200
        worst_id = 0.0
        worst_quad = 0.0
        for n, a in CONFIGS:
            ctx = _ctx(n, a)
            p = ctx.p
            basis = ctx.basis
            rng = np.random.default_rng(seed + n * 17 + int(10 * a))
            for i in range(count):
                coefs = np.zeros(basis.size)
                idx = rng.choice(basis.size, size=min(12, basis.size), replace=False)
                coefs[idx] = rng.normal(size=len(idx))
                tr = SpectralTrace(basis, coefs)
                scale = tr.norm_sq + 1.0
                mu = rng.uniform(0.4, 3.0)
                alpha = rng.uniform(0.4, 3.5)
                lhs, rhs = weiss_cross(tr, alpha, mu)
                worst_id = max(worst_id, abs(lhs - rhs) / scale)
                den = p.n + p.a + 2 * mu - 1.0
                direct = float(np.sum((basis.eigenvalues - p.eigenvalue(mu))
                                      * coefs**2)) / den
                worst_id = max(worst_id, abs(weiss_spectral(tr, mu) - direct) / scale)
            # shifted-extension identities on solution traces
            q = build_sphere_quadrature(p, 2 * basis.max_degree + 8)
            for m in (1, 2):
                poly = unit_equator_polynomial(p, m).to_float()
                tr = project(poly.evaluate, basis, q)
                nsq = tr.norm_sq
                for t in (-0.3, 0.5):
                    got = weiss_spectral_at(tr, 2.0 * m, 2.0 * m - t)
                    worst_id = max(worst_id, abs(got - t * nsq) / (nsq + 1.0))
                    got_mu = weiss_spectral_at(tr, 2.0 * m - t, 2.0 * m - t)
                    want = (1.0 + t / (p.n + p.a + 2 * (2 * m - t) - 1.0)) * t * nsq
                    worst_id = max(worst_id, abs(got_mu - want) / (nsq + 1.0))
            eng = ctx.engine
            u0f = AxisComponent(y_flat_profile(p))
            nsq = eng.profile_mass("flat", "flat")
            got = eng.weiss_energy([Term(1.0, u0f, 2 * p.s)], 1.0 + p.s)
            worst_id = max(worst_id, abs(got + (1 - p.s) * nsq) / (nsq + 1.0))
            # quadrature route against the spectral route
            nq = 2 if n == 2 else (3 if quick else 8)
            rngq = np.random.default_rng(seed + 1)
            qq = build_sphere_quadrature(p, 40)
            for _ in range(nq):
                coefs = np.zeros(basis.size)
                idx = rngq.choice(basis.size, size=6, replace=False)
                coefs[idx] = rngq.normal(size=6)
                tr = SpectralTrace(basis, coefs)
                field = TermField(eng, [Term(1.0, ModeVector.from_trace(tr), 1 + p.s)])
                wq = weiss_quadrature(field, 1 + p.s, p, np.zeros(p.n), 1.0, qq)
                ws = weiss_spectral(tr, 1 + p.s)
                worst_quad = max(worst_quad, abs(wq - ws) / (tr.norm_sq + 1.0))
        ok = worst_id <= 1e-12 and worst_quad <= 1e-8
        return ok, (f"max identity error {worst_id:.2e} (<=1e-12), "
                    f"max quadrature-vs-spectral {worst_quad:.2e} (<=1e-8)"), {
            "worst_identity": worst_id, "worst_quadrature": worst_quad}
    return _timed(1, "spectral identity suite", run)


def criterion_2_regular_corpus(quick: bool = False, seed: int = 2026) -> CriterionResult:
    def run():
        count = 150 if quick else 1000
        fails = 0
        worst_eq = 0.0
        min_margin = np.inf
        for n, a in CONFIGS:
            ctx = _ctx(n, a)
            p = ctx.p
            kap = regular_contraction(p)
            assert abs(kap - kappa_ratio(p, 2.0, 1.0 + p.s)) < 1e-15
            rng = np.random.default_rng(seed + 100 + n)
            for _ in range(count):
                tr = random_admissible_trace(ctx, rng)
                rep = check_epi_regular(ctx, tr)
                fails += not rep.passed
                min_margin = min(min_margin, rep.margin)
            e = tuple([1.0] + [0.0] * (n - 1))
            teq = StructuredTrace([(1.0, HalfSpaceComponent(RegularProfile(e, p.s)))])
            req = check_epi_regular(ctx, teq)
            worst_eq = max(worst_eq, abs(req.margin), abs(req.extras["c0"]),
                           req.extras["phi_energy_outside_deg2"])
        ok = fails == 0 and worst_eq <= 1e-8 and min_margin >= -1e-12
        return ok, (f"{len(CONFIGS)}x{count} traces, {fails} failures, "
                    f"min margin {min_margin:.3e}, equality-case defect {worst_eq:.1e}"), {
            "failures": fails, "min_margin": min_margin}
    return _timed(2, "contraction inequality corpus at 1+s", run)


def criterion_3_negative_regular(quick: bool = False, seed: int = 2026) -> CriterionResult:
    def run():
        count = 150 if quick else 1000
        fails = 0
        worst_ik = 0.0
        for n, a in CONFIGS:
            ctx = _ctx(n, a)
            p = ctx.p
            eps = negative_regular_expansion(p)
            assert abs(eps - (1 + a) / (2 * n - a + 3)) < 1e-15
            rng = np.random.default_rng(seed + 200 + n)
            for _ in range(count):
                tr = random_admissible_trace(ctx, rng)
                rep = check_epi_negative_regular(ctx, tr)
                fails += not rep.passed
            rng2 = np.random.default_rng(seed + 300 + n)
            for _ in range(50 if not quick else 10):
                tr = random_admissible_trace(ctx, rng2)
                rep = check_epi_negative_regular(ctx, tr)
                scale = 1.0 + abs(rep.W_z)
                worst_ik = max(worst_ik, abs(rep.extras["I"]) / scale,
                               abs(rep.extras["K"]) / scale)
        ok = fails == 0 and worst_ik <= 1e-9
        return ok, (f"{len(CONFIGS)}x{count} traces, {fails} failures, "
                    f"max |I|,|K| = {worst_ik:.2e} (<=1e-9)"), {
            "failures": fails, "worst_IK": worst_ik}
    return _timed(3, "negative-energy inequality corpus at 1+s", run)


def criterion_4_log_inequality(quick: bool = False, seed: int = 2026) -> CriterionResult:
    def run():
        cal_size = 120 if quick else 500
        corpus = 150 if quick else 500
        fails = 0
        log1_fails = 0
        eps_values = {}
        for n, a in CONFIGS:
            p = Params.from_a(n, a)
            ctx = _ctx(n, a)
            cal = calibrate_epsilons(p, 1, cal_size, seed + 400)
            eps = cal["eps_log"]
            eps_values[(n, a)] = eps
            if eps < 2.0**-12:
                fails += 1
            rng = np.random.default_rng(seed + 500 + n)
            for _ in range(corpus):
                tr = random_admissible_trace(ctx, rng)
                theta = _theta_for(ctx, tr)
                rep = check_epi_log(ctx, tr, 1, theta, eps)
                fails += not rep.passed
                log1_fails += not rep.extras["log1_ok"]
        ok = fails == 0 and log1_fails == 0
        det = (f"calibrated eps {sorted(set(eps_values.values()))}, "
               f"{len(CONFIGS)}x{corpus} traces, {fails} bound failures, "
               f"{log1_fails} intermediate-bound failures")
        return ok, det, {"eps": {f"{k}": v for k, v in eps_values.items()}}
    return _timed(4, "logarithmic inequality at 2m (calibrated)", run)


def _theta_for(ctx: EpiContext, tr: SpectralTrace, m: int = 1) -> float:
    p = ctx.p
    w = float(np.sum((ctx.basis.eigenvalues - p.eigenvalue(2.0 * m))
                     * tr.coefficients**2)) / (p.n + p.a + 4.0 * m - 1.0)
    return max(tr.norm_sq, abs(w)) * 1.000001


def criterion_5_negative_2m(quick: bool = False, seed: int = 2026) -> CriterionResult:
    def run():
        cal_size = 120 if quick else 500
        corpus = 150 if quick else 500
        fails = 0
        worst_model = 0.0
        for n, a in CONFIGS:
            p = Params.from_a(n, a)
            ctx = _ctx(n, a)
            cal = calibrate_epsilons(p, 1, cal_size, seed + 600)
            eps = cal["eps_neg2m"]
            rng = np.random.default_rng(seed + 700 + n)
            for _ in range(corpus):
                tr = random_admissible_trace(ctx, rng, norm=1.0)
                rep = check_epi_negative_2m(ctx, tr, 1, eps)
                fails += not rep.passed
            for m in (1, 2):
                if 2 * m + 1 > ctx.basis.max_degree:
                    continue
                h2m = ctx.h2m_coefficients(m)
                tr = SpectralTrace(ctx.basis, h2m / np.sqrt(np.dot(h2m, h2m)))
                alpha_ok = True
                try:
                    rep = check_epi_negative_2m(ctx, tr, m, eps)
                except Exception:
                    alpha_ok = False
                if alpha_ok:
                    worst_model = max(worst_model, abs(rep.margin))
        ok = fails == 0 and worst_model <= 1e-12
        return ok, (f"{len(CONFIGS)}x{corpus} traces, {fails} failures; "
                    f"model-polynomial margins exact to {worst_model:.1e}"), {}
    return _timed(5, "negative-energy inequality at 2m (calibrated)", run)


def criterion_6_constructions(quick: bool = False, seed: int = 2026) -> CriterionResult:
    def run():
        a_values = (-0.9, -0.5, 0.0, 0.5, 0.9)
        for n in (1, 2):
            for a in a_values:
                p = Params.from_a(n, a)
                for m in (1, 2, 3, 4):
                    poly = unit_equator_polynomial(p, m)
                    if not poly.la_image(p.a_exact).is_zero():
                        return False, f"operator residual at n={n} a={a} m={m}", {}
                    tr = poly.trace_y0()
                    eq_pts = np.array([[1.0] + [0.0] * n, [-1.0] + [0.0] * n]) \
                        if n == 1 else np.column_stack([
                            np.cos(np.linspace(0, 2 * np.pi, 9)),
                            np.sin(np.linspace(0, 2 * np.pi, 9)),
                            np.zeros(9)])
                    if np.max(np.abs(tr.evaluate(eq_pts) - 1.0)) > 1e-12:
                        return False, f"trace not unit at n={n} a={a} m={m}", {}
                    if extend_harmonic(tr, p) != poly:
                        return False, f"extension mismatch at n={n} a={a} m={m}", {}
        # weighted Neumann trace through a finite-difference limit
        worst = 0.0
        for s in (0.3, 0.5, 0.75):
            prof = RegularProfile((1.0,), s)
            aa = 1 - 2 * s
            x = -0.5
            vals = []
            for y in (1e-2, 5e-3, 2.5e-3):
                dy = 1e-3 * y
                d = (prof.values(np.array([[x, y + dy]]))[0]
                     - prof.values(np.array([[x, y - dy]]))[0]) / (2 * dy)
                vals.append(y**aa * d)
            extr = (4 * vals[2] - vals[1]) / 3.0
            expected = -prof.neumann_constant() * abs(x) ** (1 - s)
            worst = max(worst, abs(extr - expected))
        ok = worst <= 1e-6
        return ok, (f"rational constructions exact for m<=4, n<=2, 5 weights; "
                    f"flux-limit error {worst:.1e} (<=1e-6)"), {}
    return _timed(6, "closed-form constructions", run)


def criterion_7_frequency_gap(quick: bool = False, seed: int = 2026) -> CriterionResult:
    def run():
        rng = np.random.default_rng(seed + 800)
        worst = 0.0
        for _ in range(20):
            n = int(rng.integers(1, 3))
            a = float(rng.uniform(-0.95, 0.95))
            p = Params.from_a(n, a)
            res = gap_regular(p)
            worst = max(worst, abs(res.left_width - (1 + a) / 2),
                        abs(res.right_width - (1 + a) / 2))
        p = Params.from_s(1, 0.5)
        res = gap_regular(p)
        interval_ok = (abs(res.center - 1.5) < 1e-14
                       and abs(res.center - res.left_width - 1.0) < 1e-12
                       and abs(res.center + res.right_width - 2.0) < 1e-12)
        worst2m = 0.0
        for n, a in CONFIGS:
            p = Params.from_a(n, a)
            for m in (1, 2):
                for eps in (0.01, 0.05):
                    res = gap_2m(p, m, eps_pos=eps, eps_neg=eps)
                    closed = (p.n + p.a + 4 * m - 1) * eps / (1 + eps)
                    worst2m = max(worst2m, abs(res.left_width - closed))
        ok = worst <= 1e-12 and interval_ok and worst2m <= 1e-12
        return ok, (f"regular widths match (1+a)/2 to {worst:.1e}; "
                    f"2m closed form to {worst2m:.1e}; s=1/2 interval "
                    f"{'ok' if interval_ok else 'WRONG'}"), {}
    return _timed(7, "frequency gap computations", run)


# ---------------------------------------------------------------------------
# solver-based criteria
# ---------------------------------------------------------------------------

def _zero_obstacle(x):
    return np.zeros(x.shape[0])


def _solver_instances(quick: bool):
    """Named solver runs shared by criteria 8 and 9 (cached)."""
    from .solver import solve_nested
    key = ("instances", quick)
    if key in _sol_cache:
        return _sol_cache[key]
    nx_main = 128 if quick else 256
    out = {}
    p10 = Params.from_a(1, 0.0)
    prof = RegularProfile((1.0,), p10.s)
    out["halfspace"] = (p10, solve_nested(p10, prof.values, obstacle=_zero_obstacle,
                                          nx=nx_main, tol=1e-8), prof, None)
    poly = unit_equator_polynomial(p10, 1).to_float()
    out["parabola"] = (p10, solve_nested(p10, poly.evaluate, obstacle=_zero_obstacle,
                                         nx=nx_main, tol=1e-8), poly, None)
    p05 = Params.from_a(1, 0.5)
    prof05 = RegularProfile((1.0,), p05.s)
    out["halfspace_a05"] = (p05, solve_nested(p05, prof05.values,
                                              obstacle=_zero_obstacle,
                                              nx=128, tol=1e-8), prof05, None)
    # reduced problem with a genuine interior source (cusp-type obstacle data)
    cusp = PowerCuspObstacle(2.5, center=[0.0])
    red = reduce_obstacle(cusp, [0.0], k=2, p=p10, gamma=0.5)
    out["cusp_source"] = (p10, solve_nested(
        p10, prof.values, obstacle=_zero_obstacle,
        source=lambda x: red.h_values(x), nx=128, tol=1e-8), prof,
        lambda x: red.h_values(x))
    _sol_cache[key] = out
    return out


def criterion_8_solver_oracles(quick: bool = False, seed: int = 2026) -> CriterionResult:
    def run():
        from .solver import classify_point, solve_nested
        insts = _solver_instances(quick)
        p, sol, prof, _ = insts["halfspace"]
        pts = sol.mesh.node_points()
        exact = np.moveaxis(prof.values(pts).reshape(
            (len(sol.mesh.xs[0]), len(sol.mesh.ys))), -1, 0)
        err = np.max(np.abs(sol.values - exact)) / np.max(np.abs(exact))
        basis = _ctx(1, 0.0).basis
        res = classify_point(sol, [0.0], basis)
        n0 = extrapolate_to_zero(res.profile.radii, res.profile.N)
        w_ok = bool(np.max(np.abs(res.profile.W)) <= 0.02)
        # one refinement step
        nx2 = 2 * (128 if quick else 256)
        sol2 = solve_nested(p, prof.values, obstacle=_zero_obstacle, nx=nx2, tol=1e-8)
        pts2 = sol2.mesh.node_points()
        exact2 = np.moveaxis(prof.values(pts2).reshape(
            (len(sol2.mesh.xs[0]), len(sol2.mesh.ys))), -1, 0)
        err2 = np.max(np.abs(sol2.values - exact2)) / np.max(np.abs(exact2))
        ratio = err2 / err

        p_, sol_par, _, _ = insts["parabola"]
        res2 = classify_point(sol_par, [0.0], basis)
        coeffs = res2.polynomial.coeffs if res2.polynomial is not None else {}
        coef_err = 1.0
        if coeffs:
            c20 = coeffs.get((2, 0), 0.0)
            c02 = coeffs.get((0, 2), 0.0)
            coef_err = max(abs(c20 - 1.0), abs(c02 + 1.0))
        checks = {
            "sup_error": err <= 0.02,
            "N0_window": 1.45 <= n0 <= 1.55,
            "W_small": w_ok,
            "refinement_ratio": ratio <= 0.7,
            "parabola_kind": res2.kind == "singular" and res2.m == 1,
            "parabola_lambda": 1.9 <= res2.lam_hat <= 2.1,
            "parabola_coeffs": coef_err <= 0.05,
            "parabola_d2m": res2.d_2m == 0,
        }
        ok = all(checks.values())
        det = (f"sup err {err:.2e} (<=0.02), N(0+)={n0:.3f}, max|W|"
               f"{'<=0.02' if w_ok else ' too large'}, refinement ratio {ratio:.2f}"
               f" (<=0.7); degree-2 datum: lam={res2.lam_hat:.3f}, "
               f"coef err {coef_err:.3f}, d={res2.d_2m}")
        if not ok:
            det += " | failed: " + ",".join(k for k, v in checks.items() if not v)
        return ok, det, {"sup_error": err, "ratio": ratio, "N0": n0}
    return _timed(8, "solver oracle convergence and classification", run)


def criterion_9_monotonicity(quick: bool = False, seed: int = 2026) -> CriterionResult:
    def run():
        from .solver import decay_monitors
        insts = _solver_instances(quick)
        fails = []
        for name, (p, sol, _, h_fn) in insts.items():
            lam = 2.0 if name == "parabola" else 1.0 + p.s
            mon = decay_monitors(sol, [0.0], lam, h_fn=h_fn)
            prof = mon["profile"]
            if not mon["phi_monotone"]:
                fails.append(f"{name}:Phi")
            if not np.isfinite(mon["wmod_monotone_constant"]):
                fails.append(f"{name}:Wmod")
            if not mon["h_ratio_nondecreasing"]:
                fails.append(f"{name}:Hratio")
        ok = not fails
        return ok, ("all monitored instances monotone within 10x local "
                    "differencing error" if ok else "failures: " + ", ".join(fails)), {}
    return _timed(9, "monotonicity monitors on solver instances", run)


ALL_CRITERIA = [
    criterion_1_spectral_identities,
    criterion_2_regular_corpus,
    criterion_3_negative_regular,
    criterion_4_log_inequality,
    criterion_5_negative_2m,
    criterion_6_constructions,
    criterion_7_frequency_gap,
    criterion_8_solver_oracles,
    criterion_9_monotonicity,
]


def run_all(quick: bool = False, seed: int = 2026) -> list[CriterionResult]:
    return [c(quick=quick, seed=seed) for c in ALL_CRITERIA]

import numpy as np
import pytest

from fol.epiperimetric import (CalibrationError, EpiContext, InadmissibleTraceError,
                               PreconditionError, StructuredTrace,
                               alpha_from_eps_negative_2m, calibrate_epsilons,
                               check_epi_log, check_epi_negative_2m,
                               check_epi_negative_regular, check_epi_regular,
                               decompose_regular, log_constants, log_exponent,
                               negative_regular_expansion, random_admissible_trace,
                               regular_contraction, run_corpus)
from fol.pairing import HalfSpaceComponent, ModeVector, Term, TermField
from fol.params import ParameterError, Params
from fol.profiles import RegularProfile
from fol.spectrum import SpectralTrace
from fol.weiss import kappa_ratio

from conftest import CONFIGS

_ctx_cache = {}


def get_ctx(n, a):
    key = (n, round(a, 14))
    if key not in _ctx_cache:
        _ctx_cache[key] = EpiContext.for_params(Params.from_a(n, a))
    return _ctx_cache[key]


# ---------------------------------------------------------------------------
# contraction inequality at 1+s
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("n,a", CONFIGS)
def test_regular_corpus(n, a):
    ctx = get_ctx(n, a)
    p = ctx.p
    kap = regular_contraction(p)
    assert kap == pytest.approx(kappa_ratio(p, 2.0, 1.0 + p.s), rel=1e-14)
    rng = np.random.default_rng(1000 + n)
    count = 200 if n == 1 else 60
    for _ in range(count):
        tr = random_admissible_trace(ctx, rng)
        rep = check_epi_regular(ctx, tr)
        assert rep.passed
        assert rep.margin >= -rep.truncation_budget
        assert rep.extras["kappa"] == pytest.approx((1 + a) / (2 * n + a + 5), rel=1e-14)


def test_regular_equality_case(config):
    n, a = config
    ctx = get_ctx(n, a)
    e = tuple([1.0] + [0.0] * (n - 1))
    tr = StructuredTrace([(1.0, HalfSpaceComponent(RegularProfile(e, ctx.p.s)))])
    rep = check_epi_regular(ctx, tr)
    assert abs(rep.margin) <= 1e-8
    # rigidity of the equality case
    assert abs(rep.extras["C"] - 1.0) < 1e-12
    assert abs(rep.extras["c0"]) <= 1e-6
    assert rep.extras["phi_energy_outside_deg2"] <= 1e-6


def test_regular_pure_high_mode_trace():
    # a nonnegative degree-2 eigen-trace has no constant/linear content
    ctx = get_ctx(1, 0.0)
    h2 = ctx.h2m_coefficients(1)
    tr = SpectralTrace(ctx.basis, h2)
    dec = decompose_regular(ctx, tr, "plus")
    assert dec.C == 0.0
    assert abs(dec.c0) < 1e-13
    rep = check_epi_regular(ctx, tr)
    assert rep.passed


def test_competitor_matches_trace_on_sphere():
    ctx = get_ctx(1, 0.5)
    rng = np.random.default_rng(5)
    tr = random_admissible_trace(ctx, rng)
    dec = decompose_regular(ctx, tr, "plus")
    from fol.pairing import AxisComponent
    from fol.profiles import y_plus_profile
    h = HalfSpaceComponent(RegularProfile(tuple(dec.e), ctx.p.s))
    u0 = AxisComponent(y_plus_profile(ctx.p))
    mu = 1 + ctx.p.s
    zeta = TermField(ctx.engine, [
        Term(dec.C, h, mu), Term(dec.c0, u0, mu),
        Term(1.0, ModeVector.from_trace(tr), 2.0),
        Term(-dec.C, h, 2.0), Term(-dec.c0, u0, 2.0)])
    pts = ctx.engine._heavy_rule(ctx.p.a).points[::41]
    assert np.allclose(zeta.values(pts), tr.values(pts), atol=1e-10)
    # admissibility on the contact plane: zeta >= 0 along equator rays
    eq = np.array([[1.0, 0.0], [-1.0, 0.0]])
    for r in (0.2, 0.5, 0.9):
        assert np.all(zeta.values(r * eq) >= -1e-12)


def test_halfspace_linear_projection_aligned():
    # the profile's projection onto linear modes points along its direction
    ctx = get_ctx(2, 0.0)
    p = ctx.p
    rng = np.random.default_rng(21)
    for _ in range(4):
        tau = rng.uniform(0, 2 * np.pi)
        e = np.array([np.cos(tau), np.sin(tau)])
        row = ctx.engine.profile_mode_masses(
            HalfSpaceComponent(RegularProfile(tuple(e), p.s)))
        lin = ctx.basis.linear_indices
        grad = np.zeros(2)
        for idx, k in enumerate(lin):
            poly = ctx.basis.modes[k].trace_poly
            for i in range(2):
                exps = tuple(1 if j == i else 0 for j in range(3))
                grad[i] += row[lin][idx] * float(poly.coeffs.get(exps, 0.0))
        direction = grad / np.linalg.norm(grad)
        assert np.allclose(direction, e, atol=1e-10)


def test_inadmissible_trace_rejected():
    ctx = get_ctx(1, 0.0)
    coefs = np.zeros(ctx.basis.size)
    coefs[ctx.basis.constant_index] = -1.0
    with pytest.raises(InadmissibleTraceError):
        check_epi_regular(ctx, SpectralTrace(ctx.basis, coefs))


# ---------------------------------------------------------------------------
# expansion inequality at 1+s (negative energies)
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("n,a", CONFIGS)
def test_negative_regular_corpus(n, a):
    ctx = get_ctx(n, a)
    p = ctx.p
    eps = negative_regular_expansion(p)
    assert eps == pytest.approx((1 + a) / (2 * n - a + 3), rel=1e-14)
    if (n, a) == (1, 0.0):
        assert eps == pytest.approx(0.2, rel=1e-15)
    rng = np.random.default_rng(2000 + n)
    count = 200 if n == 1 else 60
    negatives = 0
    for _ in range(count):
        tr = random_admissible_trace(ctx, rng)
        rep = check_epi_negative_regular(ctx, tr)
        assert rep.passed
        negatives += rep.W_z < 0
    assert negatives > 0  # the corpus exercises the intended sign


@pytest.mark.parametrize("n,a", CONFIGS)
def test_negative_regular_internal_cancellations(n, a):
    ctx = get_ctx(n, a)
    rng = np.random.default_rng(37)
    for _ in range(50 if n == 1 else 20):
        tr = random_admissible_trace(ctx, rng)
        rep = check_epi_negative_regular(ctx, tr)
        scale = 1.0 + abs(rep.W_z)
        assert abs(rep.extras["I"]) <= 1e-9 * scale
        assert abs(rep.extras["K"]) <= 1e-9 * scale
        assert rep.extras["J"] <= 1e-12
        assert rep.extras["L"] <= 1e-12
        assert rep.extras["split_consistency"] <= 1e-10 * scale


def test_negative_regular_flat_profile_only():
    # trace with only a pure-|y| hump: C = 0 and the energies reduce to the
    # profile algebra, margin >= 0 with the documented cancellation
    ctx = get_ctx(1, 0.0)
    from fol.pairing import AxisComponent
    from fol.profiles import y_flat_profile
    tr = StructuredTrace([(0.8, AxisComponent(y_flat_profile(ctx.p)))])
    rep = check_epi_negative_regular(ctx, tr)
    assert rep.extras["C"] == 0.0
    assert abs(rep.extras["I"]) < 1e-12
    assert rep.margin >= -rep.truncation_budget


# ---------------------------------------------------------------------------
# logarithmic inequality at 2m
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("n,a", CONFIGS)
def test_log_corpus_with_fixed_eps(n, a):
    ctx = get_ctx(n, a)
    beta = log_exponent(ctx.p)
    assert beta == pytest.approx((n - 1) / (n + 1))
    rng = np.random.default_rng(3000 + n)
    eps = 2.0**-7
    for _ in range(120 if n == 1 else 40):
        tr = random_admissible_trace(ctx, rng)
        rep = check_epi_log(ctx, tr, 1, _theta(ctx, tr), eps)
        assert rep.passed
        assert rep.extras["log1_ok"]
        assert rep.extras["theta_min"] <= rep.extras["theta"] + 1e-12


def _theta(ctx, tr):
    w = float(np.sum((ctx.basis.eigenvalues - ctx.p.eigenvalue(2.0))
                     * tr.coefficients**2)) / (ctx.p.n + ctx.p.a + 3.0)
    return 2.0 * max(tr.norm_sq, abs(w), 0.1)


def test_log_unit_equator_trace_zero_margin(config):
    n, a = config
    ctx = get_ctx(n, a)
    h2 = ctx.h2m_coefficients(1)
    tr = SpectralTrace(ctx.basis, h2 / np.sqrt(np.dot(h2, h2)))
    rep = check_epi_log(ctx, tr, 1, 1.0, 2.0**-6)
    assert rep.W_z == pytest.approx(0.0, abs=1e-13)
    assert rep.margin == pytest.approx(0.0, abs=1e-12)
    assert rep.extras["M"] == pytest.approx(0.0, abs=1e-13)


def test_log_high_modes_only_n2():
    # beta = 1/3; no polynomial part, pure high-mode decay
    ctx = get_ctx(2, 0.0)
    coefs = np.zeros(ctx.basis.size)
    for k in ctx.basis.indices_of_degree(3):
        coefs[k] = 0.2
    for k in ctx.basis.indices_of_degree(4):
        coefs[k] = 0.1
    tr = SpectralTrace(ctx.basis, coefs)
    tr = SpectralTrace(ctx.basis, coefs - min(0.0, ctx.equator_min(tr))
                       * _const_unit(ctx))
    rep = check_epi_log(ctx, tr, 1, _theta(ctx, tr), 2.0**-6)
    assert rep.extras["M"] <= 1e-12
    assert rep.margin > 0
    assert rep.passed


def _const_unit(ctx):
    v = np.zeros(ctx.basis.size)
    k0 = ctx.basis.constant_index
    v[k0] = 1.0 / float(ctx.basis.modes[k0].trace_poly.coeffs[tuple([0] * (ctx.p.n + 1))])
    return v


def test_log_theta_precondition():
    ctx = get_ctx(1, 0.0)
    rng = np.random.default_rng(9)
    tr = random_admissible_trace(ctx, rng)
    with pytest.raises(PreconditionError):
        check_epi_log(ctx, tr, 1, 0.5 * tr.norm_sq, 2.0**-6)


def test_log_n1_beta_degenerates_to_plain_factor():
    ctx = get_ctx(1, 0.5)
    rng = np.random.default_rng(12)
    eps = 2.0**-6
    tr = random_admissible_trace(ctx, rng)
    rep = check_epi_log(ctx, tr, 1, _theta(ctx, tr), eps)
    if rep.W_z > 0:
        assert rep.bound == pytest.approx(rep.W_z * (1 - eps), rel=1e-12)


# ---------------------------------------------------------------------------
# expansion inequality at 2m (negative energies)
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("n,a", CONFIGS)
def test_negative_2m_corpus(n, a):
    ctx = get_ctx(n, a)
    rng = np.random.default_rng(4000 + n)
    eps = 2.0**-7
    negatives = 0
    for _ in range(120 if n == 1 else 40):
        tr = random_admissible_trace(ctx, rng, norm=1.0)
        rep = check_epi_negative_2m(ctx, tr, 1, eps)
        assert rep.passed
        negatives += rep.W_z < 0
    assert negatives > 0


def test_negative_2m_low_mode_negativity():
    # only sub-2m content: the key term is strictly negative for the
    # constructed competitor, so the margin is strictly positive
    ctx = get_ctx(1, 0.0)
    coefs = np.zeros(ctx.basis.size)
    coefs[ctx.basis.constant_index] = 0.4
    coefs[ctx.basis.linear_indices[0]] = 0.3
    tr0 = SpectralTrace(ctx.basis, coefs)
    shift = -min(0.0, ctx.equator_min(tr0))
    coefs = coefs + shift * _const_unit(ctx)
    tr = SpectralTrace(ctx.basis, coefs / np.sqrt(np.dot(coefs, coefs)))
    rep = check_epi_negative_2m(ctx, tr, 1, 2.0**-5)
    assert rep.W_z < 0
    assert rep.extras["zeta_used"] == "constructed"
    assert rep.margin > 0


def test_negative_2m_norm_precondition():
    ctx = get_ctx(1, 0.0)
    rng = np.random.default_rng(13)
    tr = random_admissible_trace(ctx, rng, norm=1.5)
    with pytest.raises(PreconditionError):
        check_epi_negative_2m(ctx, tr, 1, 2.0**-6)


def test_negative_2m_eps_band():
    ctx = get_ctx(1, 0.0)
    rng = np.random.default_rng(14)
    tr = random_admissible_trace(ctx, rng, norm=1.0)
    with pytest.raises(ParameterError):
        check_epi_negative_2m(ctx, tr, 1, 0.4)  # alpha leaves (2m-1/2, 2m)
    alpha = alpha_from_eps_negative_2m(ctx.p, 1, 0.01)
    assert 1.5 < alpha < 2.0


# ---------------------------------------------------------------------------
# calibration
# ---------------------------------------------------------------------------

def test_calibrate_epsilons_reports():
    p = Params.from_a(1, 0.0)
    cal = calibrate_epsilons(p, 1, 120, 7)
    assert cal["eps_log"] >= 2.0**-12
    assert cal["eps_neg2m"] >= 2.0**-12
    lam = p.eigenvalue
    cbar2 = (lam(3.0) - lam(2.5)) / lam(3.0)
    assert cal["Cbar2"] == pytest.approx(cbar2, rel=1e-14)
    assert cal["C3_fitted"] >= 0.0


def test_run_corpus_selector():
    ctx = get_ctx(1, 0.0)
    reports = run_corpus(ctx, "regular", 10, seed=3)
    assert len(reports) == 10 and all(r.passed for r in reports)
    with pytest.raises(ParameterError):
        run_corpus(ctx, "bogus", 1, seed=0)


def test_determinism_of_corpus():
    ctx = get_ctx(1, 0.5)
    r1 = run_corpus(ctx, "regular", 5, seed=42)
    r2 = run_corpus(ctx, "regular", 5, seed=42)
    assert [r.margin for r in r1] == [r.margin for r in r2]

import numpy as np
import pytest

from fol.params import ParameterError, Params
from fol.polys import Poly
from fol.profiles import (PolynomialObstacle, RegularProfile, extend_harmonic,
                          reduce_obstacle, unit_equator_polynomial)
from fol.solver import (CapabilityError, GridField, GridSolution, build_mesh,
                        classify_point, decay_monitors, extract_free_boundary,
                        graded_deltas, monitor_radii, rescale, solve_nested,
                        solve_psor, tangent_defect_dimension)
from fol.spectrum import build_basis
from fol.weiss import extrapolate_to_zero

P10 = Params.from_a(1, 0.0)
_basis_cache = {}
_sol_cache = {}


def basis_for(p):
    key = (p.n, p.a)
    if key not in _basis_cache:
        _basis_cache[key] = build_basis(p, 8)
    return _basis_cache[key]


def zero_obstacle(x):
    return np.zeros(x.shape[0])


def halfspace_solution(nx=128, a=0.0):
    key = ("h", nx, a)
    if key not in _sol_cache:
        p = Params.from_a(1, a)
        prof = RegularProfile((1.0,), p.s)
        _sol_cache[key] = (solve_nested(p, prof.values, obstacle=zero_obstacle,
                                        nx=nx, tol=1e-8), prof)
    return _sol_cache[key]


def parabola_solution(nx=128):
    key = ("p2", nx)
    if key not in _sol_cache:
        poly = unit_equator_polynomial(P10, 1).to_float()
        _sol_cache[key] = (solve_nested(P10, poly.evaluate, obstacle=zero_obstacle,
                                        nx=nx, tol=1e-8), poly)
    return _sol_cache[key]


# ---------------------------------------------------------------------------
# mesh and operator
# ---------------------------------------------------------------------------

def test_graded_deltas_ratio_and_floor():
    d = graded_deltas(128, 0.85)
    assert d.sum() == pytest.approx(1.0, rel=1e-14)
    ratios = d[:10] / d[1:11]
    assert np.allclose(ratios, 0.85, rtol=1e-12)
    # at least 6 cells inside y < sqrt(min cell)
    ys = np.concatenate([[0.0], np.cumsum(d)])
    assert np.sum(ys[1:] < np.sqrt(d[0])) >= 6


def test_mesh_weights_finite_for_negative_exponent():
    p = Params.from_a(1, -0.9)
    mesh = build_mesh(p, nx=16)
    assert np.all(np.isfinite(mesh.cell_weight))
    assert np.all(mesh.cell_weight > 0)
    assert np.all(np.isfinite(mesh.strip_weight))
    for _, g in mesh.conds:
        assert np.all(g > 0)


def test_unweighted_operator_is_classical_stencil():
    p = Params.from_a(1, 0.0)
    mesh = build_mesh(p, nx=8, ny=8, ratio=1.0)
    hx = mesh.xs[0][1] - mesh.xs[0][0]
    dy = np.diff(mesh.ys)
    assert np.allclose(dy, dy[0])
    # x-edge conductance at an interior row: dy/hx
    gx = dict(mesh.conds)[1]
    assert gx[4, 3] == pytest.approx(dy[0] / hx, rel=1e-12)
    gy = dict(mesh.conds)[0]
    assert gy[3, 4] == pytest.approx(hx / dy[0], rel=1e-12)


def test_energy_zero_for_constants_and_psd():
    p = Params.from_a(1, 0.5)
    mesh = build_mesh(p, nx=12)
    v = np.full(mesh.shape, 3.7)
    assert mesh.energy(v) == pytest.approx(0.0, abs=1e-12)
    rng = np.random.default_rng(0)
    for _ in range(3):
        v = rng.normal(size=mesh.shape)
        assert mesh.energy(v) >= 0.0


def test_discrete_energy_converges_for_halfspace():
    p = Params.from_a(1, 0.5)
    prof = RegularProfile((1.0,), p.s)
    errs = []
    for nx in (32, 64, 128):
        mesh = build_mesh(p, nx=nx)
        pts = mesh.node_points()
        v = np.moveaxis(prof.values(pts).reshape((len(mesh.xs[0]), len(mesh.ys))), -1, 0)
        errs.append(mesh.energy(v))
    # energy of nodal samples converges (first order or better)
    d1 = abs(errs[1] - errs[2])
    d0 = abs(errs[0] - errs[1])
    assert d1 < 0.7 * d0


# ---------------------------------------------------------------------------
# projected SOR
# ---------------------------------------------------------------------------

def test_unconstrained_harmonic_with_low_obstacle():
    mesh = build_mesh(P10, nx=32)
    sol = solve_psor(mesh, lambda pts: np.zeros(pts.shape[0]),
                     obstacle=lambda x: np.full(x.shape[0], -1.0), tol=1e-10)
    assert sol.converged
    assert np.max(np.abs(sol.values)) < 1e-9
    assert extract_free_boundary(sol).size == 0


def test_halfspace_oracle_convergence():
    sol, prof = halfspace_solution(128)
    pts = sol.mesh.node_points()
    exact = np.moveaxis(prof.values(pts).reshape(
        (len(sol.mesh.xs[0]), len(sol.mesh.ys))), -1, 0)
    err = np.max(np.abs(sol.values - exact)) / np.max(np.abs(exact))
    assert err < 0.02
    assert sol.converged
    sol64, _ = halfspace_solution(64)
    pts64 = sol64.mesh.node_points()
    exact64 = np.moveaxis(prof.values(pts64).reshape(
        (len(sol64.mesh.xs[0]), len(sol64.mesh.ys))), -1, 0)
    err64 = np.max(np.abs(sol64.values - exact64)) / np.max(np.abs(exact64))
    assert err < 0.7 * err64


def test_energy_monotone_and_kkt():
    sol, prof = halfspace_solution(128)
    en = sol.energy_history
    assert np.all(np.diff(en) <= 1e-10 * np.maximum(np.abs(en[:-1]), 1.0))
    # three-way complementarity on the contact line
    gap = sol.y0_slice() - sol.obstacle
    flux = sol.flux_y0()
    interior = slice(1, -1)
    assert np.min(gap[interior]) >= -sol.tol
    assert np.max(flux[interior]) <= 1e-2  # flux <= 0 up to discretization
    prod = gap[interior] * flux[interior]
    assert np.max(np.abs(prod)) <= 5e-4 * max(1.0, np.max(np.abs(flux)))
    # interior stencil residual off the contact set, normalized by the diagonal
    mesh = sol.mesh
    res = mesh.diagonal() * sol.values - mesh.neighbor_sum(sol.values)
    inner = np.zeros(mesh.shape, dtype=bool)
    inner[1:-1, 1:-1] = True
    assert np.max(np.abs(res[inner]) / mesh.diagonal()[inner]) <= 1e3 * sol.tol


def test_halfspace_flux_matches_formula():
    sol, prof = halfspace_solution(128)
    xs = sol.mesh.xs[0]
    flux = sol.flux_y0()
    inside = (xs < -0.2) & (xs > -0.8)
    expected = prof.neumann_trace(xs[inside, None])
    assert np.max(np.abs(flux[inside] - expected)) < 0.05


def test_free_boundary_near_origin():
    sol, _ = halfspace_solution(128)
    fb = extract_free_boundary(sol)
    assert fb.size >= 1
    assert np.min(np.abs(fb)) < 4.0 / 128


def test_parabola_contact_is_pointlike():
    sol, poly = parabola_solution(128)
    v0 = sol.y0_slice()
    xs = sol.mesh.xs[0]
    i = int(np.argmin(v0))
    assert abs(xs[i]) <= 2.0 / 128
    assert v0[i] < 1e-4
    # zero flux everywhere: the datum is already a solution
    assert np.max(np.abs(sol.flux_y0()[1:-1])) < 2e-2


def test_nonconverged_flag():
    mesh = build_mesh(P10, nx=32)
    prof = RegularProfile((1.0,), P10.s)
    sol = solve_psor(mesh, prof.values, obstacle=zero_obstacle, tol=1e-14,
                     max_iters=5)
    assert not sol.converged
    assert sol.iterations == 5


def test_n2_capability_flag():
    p = Params.from_a(2, 0.0)
    with pytest.raises(CapabilityError):
        build_mesh(p, nx=16)
    mesh = build_mesh(p, nx=12, ny=10, enable_n2=True)
    assert mesh.shape == (11, 13, 13)


def test_n2_coarse_solve_runs():
    p = Params.from_a(2, 0.0)
    prof = RegularProfile((1.0, 0.0), p.s)
    sol = solve_nested(p, prof.values, obstacle=zero_obstacle, nx=24, ny=20,
                       tol=1e-6, enable_n2=True, levels=2)
    assert sol.converged
    pts = sol.mesh.node_points()
    exact = prof.values(pts)
    got = GridField(sol).values(pts)
    err = np.max(np.abs(got - exact)) / np.max(np.abs(exact))
    assert err < 0.08


# ---------------------------------------------------------------------------
# reduction correctness
# ---------------------------------------------------------------------------

def test_polynomial_obstacle_reduction_roundtrip():
    p = P10
    phi_poly = Poly(1, {(0,): -0.05, (2,): -0.5})   # concave bump obstacle
    obstacle = PolynomialObstacle(phi_poly)
    red = reduce_obstacle(obstacle, [0.0], k=2, p=p)
    datum = lambda pts: np.maximum(0.0, pts[:, 0])**2 + 0.05
    direct = solve_nested(p, datum,
                          obstacle=lambda x: obstacle.value(x), nx=64, tol=1e-9)
    ext = red.extension

    def reduced_datum(pts):
        x = pts[:, :-1]
        corr = obstacle.value(x) - red.taylor_poly.evaluate(x)
        return datum(pts) - ext.evaluate(pts) - corr

    reduced = solve_nested(p, reduced_datum, obstacle=zero_obstacle, nx=64, tol=1e-9)
    pts = direct.mesh.node_points()
    back = reduced.values + np.moveaxis(
        (ext.evaluate(pts) + (obstacle.value(pts[:, :-1])
                              - red.taylor_poly.evaluate(pts[:, :-1]))).reshape(
            (len(direct.mesh.xs[0]), len(direct.mesh.ys))), -1, 0)
    err = np.max(np.abs(back - direct.values)) / np.max(np.abs(direct.values))
    assert err < 5e-6


# ---------------------------------------------------------------------------
# rescalings, classification, monitors
# ---------------------------------------------------------------------------

def test_rescaling_of_homogeneous_field_is_scale_free():
    sol, prof = halfspace_solution(128)
    f1 = rescale(sol, [0.0], 0.3, mode="homogeneous", lam=1.5)
    f2 = rescale(sol, [0.0], 0.15, mode="homogeneous", lam=1.5)
    rng = np.random.default_rng(4)
    th = rng.normal(size=(40, 2))
    th /= np.linalg.norm(th, axis=1)[:, None]
    v1, v2 = f1.values(th), f2.values(th)
    assert np.max(np.abs(v1 - v2)) < 5e-3 * np.max(np.abs(v1))


def test_rescaling_converges_to_profile():
    sol, prof = halfspace_solution(128)
    rng = np.random.default_rng(5)
    th = rng.normal(size=(60, 2))
    th /= np.linalg.norm(th, axis=1)[:, None]
    exact = prof.values(th)
    sups = []
    for r in (0.4, 0.2, 0.1):
        f = rescale(sol, [0.0], r, mode="homogeneous", lam=1.5)
        sups.append(np.max(np.abs(f.values(th) - exact)))
    assert sups[-1] < 0.02 * np.max(np.abs(exact))


def test_frequency_rescaling_normalizes_boundary_mass():
    sol, _ = halfspace_solution(128)
    from fol.quadrature import build_sphere_quadrature
    q = build_sphere_quadrature(P10, 24)
    f = rescale(sol, [0.0], 0.25, mode="frequency", q=q)
    vals = f.values(q.points)
    assert q.integrate(vals**2) == pytest.approx(1.0, rel=1e-6)


def test_classify_halfspace_point():
    sol, _ = halfspace_solution(256)
    res = classify_point(sol, [0.0], basis_for(P10))
    assert res.kind == "regular"
    assert abs(res.lam_hat - 1.5) < 0.05
    assert res.e is not None and res.e[0] == 1.0
    assert abs(res.C - 1.0) < 0.05
    assert res.H0 > 0
    n0 = extrapolate_to_zero(res.profile.radii, res.profile.N)
    assert 1.45 <= n0 <= 1.55
    assert np.max(np.abs(res.profile.W)) <= 0.02


def test_classify_parabola_point():
    sol, _ = parabola_solution(256)
    res = classify_point(sol, [0.0], basis_for(P10))
    assert res.kind == "singular"
    assert res.m == 1
    assert 1.9 <= res.lam_hat <= 2.1
    assert res.d_2m == 0
    coeffs = res.polynomial.coeffs
    ratio = coeffs[(0, 2)] / coeffs[(2, 0)]
    assert ratio == pytest.approx(-1.0, abs=0.05)
    assert abs(coeffs[(2, 0)] - 1.0) < 0.05


def test_tangent_defect_dimension_cases():
    # grad_x of x^2 - y^2 trace: 2x, rank 1, defect 0
    poly = Poly(2, {(2, 0): 1.0, (0, 2): -1.0})
    assert tangent_defect_dimension(poly, 1) == 0
    # n=2: polynomial independent of x2 -> one invariant direction
    poly2 = Poly(3, {(2, 0, 0): 1.0, (0, 0, 2): -1.0})
    assert tangent_defect_dimension(poly2, 2) == 1
    # y-only polynomial: trace vanishes, every direction invariant
    poly3 = Poly(3, {(0, 0, 2): 1.0})
    assert tangent_defect_dimension(poly3, 2) == 2


def test_monitors_on_halfspace_instance():
    sol, _ = halfspace_solution(128)
    mon = decay_monitors(sol, [0.0], 1.5)
    assert mon["w_max_abs"] <= 0.02
    assert mon["h_ratio_nondecreasing"]
    assert mon["phi_monotone"]
    assert np.isfinite(mon["wmod_monotone_constant"])


def test_monitor_fit_on_perturbed_datum():
    p = P10
    prof = RegularProfile((1.0,), p.s)
    basis = basis_for(p)
    m3 = basis.modes[basis.indices_of_degree(3)[0]]

    def datum(pts):
        return prof.values(pts) + 0.4 * m3.values(pts)

    sol = solve_nested(p, datum, obstacle=zero_obstacle, nx=128, tol=1e-8)
    mon = decay_monitors(sol, [0.0], 1.5)
    assert mon["w_max_abs"] > 0.02           # genuinely nonzero energy
    assert mon["w_decay_exponent"] > 0.0     # fitted power-law decay


def test_frequency_consistency_at_classified_points():
    # the generalized and pure frequency limits agree: Phi(0+) ~ n+a+2N(0+)
    p = P10
    for maker in (halfspace_solution, parabola_solution):
        sol = maker(256)[0]
        res = classify_point(sol, [0.0], basis_for(p))
        n0 = extrapolate_to_zero(res.profile.radii, res.profile.N, drop_smallest=1)
        phi0 = p.n + p.a + 2.0 * res.lam_hat
        assert abs(phi0 - (p.n + p.a + 2.0 * n0)) <= 0.05


def test_rescaling_cauchy_monitor():
    # weighted L1 distances between successive homogeneous rescalings decay;
    # needs a genuinely inhomogeneous solution (an exactly homogeneous datum
    # only produces discretization noise)
    from fol.quadrature import build_sphere_quadrature
    p = P10
    prof = RegularProfile((1.0,), p.s)
    m3 = basis_for(p).modes[basis_for(p).indices_of_degree(3)[0]]

    def datum(pts):
        return prof.values(pts) + 0.4 * m3.values(pts)

    sol = solve_nested(p, datum, obstacle=zero_obstacle, nx=128, tol=1e-8)
    fb = extract_free_boundary(sol)
    x0 = [float(fb[np.argmin(np.abs(fb))])]   # the perturbation shifts it off 0
    q = build_sphere_quadrature(p, 24)
    radii = [0.6, 0.42, 0.3, 0.21]
    fields = [rescale(sol, x0, r, mode="homogeneous", lam=1.5) for r in radii]
    dists = []
    for f1, f2 in zip(fields, fields[1:]):
        dists.append(q.integrate(np.abs(f1.values(q.points) - f2.values(q.points))))
    assert dists[-1] < 0.5 * dists[0]
    assert all(d2 < d1 for d1, d2 in zip(dists, dists[1:]))


def test_monitor_radii_respects_resolution():
    sol, _ = halfspace_solution(128)
    radii = monitor_radii(sol, [0.0])
    assert radii.max() <= 0.5
    assert radii.min() >= 8.0 * sol.mesh.resolution_scale


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def test_checkpoint_roundtrip():
    sol, _ = halfspace_solution(64)
    blob = sol.checkpoint_bytes()
    back = GridSolution.from_checkpoint(blob)
    assert np.allclose(back.values, sol.values)
    assert back.converged == sol.converged
    assert back.params.a == sol.params.a


def test_slice_csv_format():
    sol, _ = halfspace_solution(64)
    text = sol.slice_csv()
    lines = text.strip().split("\n")
    assert lines[0] == "x,v,phi,flux,contact"
    assert len(lines) == len(sol.mesh.xs[0]) + 1
    first = lines[1].split(",")
    assert len(first) == 5

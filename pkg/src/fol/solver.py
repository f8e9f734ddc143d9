"""Discrete minimizer of the weighted Dirichlet energy with a thin obstacle.

Half-domain box {|x_i| <= 1, 0 <= y <= 1}, tensor grid graded toward
y = 0.  The energy is a sum of edge terms g_e (dv_e)^2 with conductances
from exact integrals of y^a over cells (the weight is never sampled at
nodes, so a < 0 stays finite):

  * vertical edges: (transverse cell area) * int_cell y^a dy / dy^2,
  * horizontal edges: (strip integral of y^a) * (transverse length) / dx^2.

Projected red-black SOR solves the complementarity system; red nodes of
the 5/7-point stencil are mutually uncoupled, so each half-sweep is an
exact sequence of one-dimensional constrained minimizations and the
energy is nonincreasing for relaxation factors in (0, 2).

The y = 0 row carries the obstacle constraint; its natural condition is
the vanishing (or, on the contact set, nonpositive) weighted flux
lim y^a dv/dy, estimated from the first cell through the exact local
profile v = v0 + B y^{1-a}/(1-a).
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .params import ParameterError, Params
from .quadrature import SphereQuadrature, build_sphere_quadrature
from .spectrum import EigenBasis
from .weiss import (build_profile, calibrate_frequency_constant,
                    extrapolate_to_zero, geometric_radii)


class CapabilityError(RuntimeError):
    """Requested configuration is behind a disabled capability flag."""


def graded_deltas(count: int, ratio: float = 0.85, max_graded: int = 24) -> np.ndarray:
    """Cell sizes on [0, 1]: geometric with the given ratio near 0, uniform above.

    A full-depth geometric grading at ratio 0.85 would underflow for
    hundreds of rows; capping the graded block keeps the smallest cell
    around 0.85^max_graded of uniform while preserving the ratio there.
    """
    if count < 4:
        raise ParameterError(f"need at least 4 cells, got {count}")
    n_geo = min(max_graded, count - 1)
    raw = ratio ** np.maximum(0, n_geo - np.arange(count))
    return raw / raw.sum()


@dataclass
class Mesh:
    params: Params
    xs: list[np.ndarray]     # node coordinates per x-axis (each uniform)
    ys: np.ndarray           # y nodes, ys[0] = 0, graded toward 0
    # derived arrays filled by __post_init__
    strip_weight: np.ndarray = field(init=False)   # int y^a over each row's strip
    cell_weight: np.ndarray = field(init=False)    # int y^a over each y-cell
    conds: list = field(init=False)                # (axis, conductance array)
    node_measure: np.ndarray = field(init=False)   # weighted cell measure per node

    def __post_init__(self):
        p = self.params
        a = p.a
        ys = self.ys
        if ys[0] != 0.0:
            raise ParameterError("y grid must start at 0")
        dy = np.diff(ys)
        if np.any(dy <= 0):
            raise ParameterError("degenerate y cells")
        prim = lambda y: y ** (1.0 + a) / (1.0 + a)
        self.cell_weight = prim(ys[1:]) - prim(ys[:-1])
        bounds = np.concatenate([[0.0], 0.5 * (ys[1:] + ys[:-1]), [ys[-1]]])
        self.strip_weight = prim(bounds[1:]) - prim(bounds[:-1])

        own = []
        for xs in self.xs:
            hx = xs[1] - xs[0]
            o = np.full(xs.size, hx)
            o[0] = o[-1] = hx / 2.0
            own.append(o)

        # shape: (Ny+1, Nx1+1[, Nx2+1]); axis 0 is y
        shape = tuple([ys.size] + [xs.size for xs in self.xs])
        conds = []
        # vertical edges along y
        gy = self.cell_weight / dy**2
        trans = np.ones(shape[1:])
        for d, o in enumerate(own):
            sl = [None] * len(own)
            sl[d] = slice(None)
            trans = trans * o[tuple(sl)]
        conds.append((0, gy.reshape([-1] + [1] * len(own)) * trans[None, ...]))
        # horizontal edges along each x-axis: (y-strip integral of the weight)
        # times the transverse ownership, divided by the edge length
        for d, xs in enumerate(self.xs):
            hx = xs[1] - xs[0]
            g = np.ones(shape)
            g = g * self.strip_weight.reshape([-1] + [1] * len(own))
            for dd, o in enumerate(own):
                if dd == d:
                    continue
                sl = [None] * (len(own) + 1)
                sl[dd + 1] = slice(None)
                g = g * o[tuple(sl)]
            take = [slice(None)] * len(shape)
            take[d + 1] = slice(0, shape[d + 1] - 1)
            conds.append((d + 1, g[tuple(take)] / hx))
        self.conds = conds

        meas = self.strip_weight.reshape([-1] + [1] * len(own)) * trans[None, ...]
        self.node_measure = meas

    @property
    def shape(self) -> tuple:
        return tuple([self.ys.size] + [xs.size for xs in self.xs])

    @property
    def min_cell(self) -> float:
        hxs = [xs[1] - xs[0] for xs in self.xs]
        return min(min(hxs), float(np.min(np.diff(self.ys))))

    @property
    def resolution_scale(self) -> float:
        """Coarsest per-axis resolution: the honest floor for radial monitors.

        The graded y-axis is much finer than x near the contact plane, so
        keying the monitor window to the global minimum cell would let
        interpolation noise dominate; the binding scale is the coarsest
        axis resolution.
        """
        hxs = [xs[1] - xs[0] for xs in self.xs]
        return max(max(hxs), float(np.min(np.diff(self.ys))))

    def diagonal(self) -> np.ndarray:
        diag = np.zeros(self.shape)
        for axis, g in self.conds:
            lo = [slice(None)] * len(self.shape)
            hi = [slice(None)] * len(self.shape)
            lo[axis] = slice(0, -1)
            hi[axis] = slice(1, None)
            diag[tuple(lo)] += g
            diag[tuple(hi)] += g
        return diag

    def neighbor_sum(self, v: np.ndarray) -> np.ndarray:
        out = np.zeros_like(v)
        for axis, g in self.conds:
            lo = [slice(None)] * v.ndim
            hi = [slice(None)] * v.ndim
            lo[axis] = slice(0, -1)
            hi[axis] = slice(1, None)
            out[tuple(lo)] += g * v[tuple(hi)]
            out[tuple(hi)] += g * v[tuple(lo)]
        return out

    def energy(self, v: np.ndarray, source: np.ndarray | None = None) -> float:
        total = 0.0
        for axis, g in self.conds:
            dv = np.diff(v, axis=axis)
            total += float(np.sum(g * dv * dv))
        if source is not None:
            total -= 2.0 * float(np.sum(source * v))
        return total

    def node_points(self) -> np.ndarray:
        """All node coordinates as (N, n+1) with y last."""
        grids = np.meshgrid(*self.xs, self.ys, indexing="ij")
        # meshgrid order: x1[, x2], y; reorder to rows matching shape (y first)
        pts = np.stack([g.ravel() for g in grids], axis=1)
        return pts


def build_mesh(p: Params, nx: int = 128, ny: int | None = None,
               ratio: float = 0.85, enable_n2: bool = False) -> Mesh:
    p.require_desk_scale()
    if p.n == 2 and not enable_n2:
        raise CapabilityError("the n=2 grid solver is behind enable_n2=True "
                              "(coarse grids recommended)")
    if ny is None:
        ny = nx
    xs = [np.linspace(-1.0, 1.0, nx + 1) for _ in range(p.n)]
    ys = np.concatenate([[0.0], np.cumsum(graded_deltas(ny, ratio))])
    ys[-1] = 1.0
    return Mesh(params=p, xs=xs, ys=ys)


@dataclass
class GridSolution:
    mesh: Mesh
    values: np.ndarray
    obstacle: np.ndarray          # on the y = 0 slice
    source: np.ndarray | None
    tol: float
    iterations: int
    converged: bool
    energy_history: np.ndarray
    datum_name: str = ""

    @property
    def params(self) -> Params:
        return self.mesh.params

    @property
    def contact_tol(self) -> float:
        return 10.0 * self.tol

    def y0_slice(self) -> np.ndarray:
        return self.values[0]

    def flux_y0(self) -> np.ndarray:
        """lim y^a dv/dy from the first cell's exact power-law profile."""
        p = self.params
        y1 = self.mesh.ys[1]
        dv = self.values[1] - self.values[0]
        return dv * (1.0 - p.a) / y1 ** (1.0 - p.a)

    def contact_mask(self) -> np.ndarray:
        return (self.values[0] - self.obstacle) <= self.contact_tol

    def checkpoint_bytes(self) -> bytes:
        header = json.dumps({
            "n": self.params.n, "a": self.params.a,
            "shape": list(self.values.shape),
            "nx": [len(xs) - 1 for xs in self.mesh.xs],
            "ny": len(self.mesh.ys) - 1,
            "tol": self.tol, "iterations": self.iterations,
            "converged": self.converged, "datum": self.datum_name,
        }, sort_keys=True).encode()
        return (struct.pack("<I", len(header)) + header
                + self.values.astype("<f8").tobytes()
                + self.obstacle.astype("<f8").tobytes())

    @classmethod
    def from_checkpoint(cls, blob: bytes, mesh_builder=None) -> "GridSolution":
        (hlen,) = struct.unpack("<I", blob[:4])
        header = json.loads(blob[4:4 + hlen].decode())
        p = Params.from_a(header["n"], header["a"])
        mesh = build_mesh(p, nx=header["nx"][0], ny=header["ny"],
                          enable_n2=(header["n"] == 2))
        shape = tuple(header["shape"])
        count = int(np.prod(shape))
        off = 4 + hlen
        vals = np.frombuffer(blob[off:off + 8 * count], dtype="<f8").reshape(shape)
        off += 8 * count
        obst_shape = shape[1:]
        ocount = int(np.prod(obst_shape))
        obst = np.frombuffer(blob[off:off + 8 * ocount], dtype="<f8").reshape(obst_shape)
        return cls(mesh=mesh, values=vals.copy(), obstacle=obst.copy(), source=None,
                   tol=header["tol"], iterations=header["iterations"],
                   converged=header["converged"], energy_history=np.array([]),
                   datum_name=header["datum"])

    def slice_csv(self) -> str:
        buf = io.StringIO()
        buf.write("x,v,phi,flux,contact\n")
        xs = self.mesh.xs[0]
        v0 = self.y0_slice()
        flux = self.flux_y0()
        contact = self.contact_mask()
        if self.params.n == 1:
            for i in range(xs.size):
                buf.write(f"{xs[i]:.17g},{v0[i]:.17g},{self.obstacle[i]:.17g},"
                          f"{flux[i]:.17g},{int(contact[i])}\n")
        else:
            buf.write("")  # n=2 slice exported along the x1 axis at x2 = 0
            j = self.values.shape[2] // 2
            for i in range(xs.size):
                buf.write(f"{xs[i]:.17g},{v0[i, j]:.17g},{self.obstacle[i, j]:.17g},"
                          f"{flux[i, j]:.17g},{int(contact[i, j])}\n")
        return buf.getvalue()


def _checker_masks(shape) -> tuple[np.ndarray, np.ndarray]:
    idx = np.zeros(shape, dtype=int)
    for d in range(len(shape)):
        sl = [None] * len(shape)
        sl[d] = slice(None)
        idx = idx + np.arange(shape[d])[tuple(sl)]
    red = idx % 2 == 0
    return red, ~red


def solve_psor(mesh: Mesh, datum, obstacle=None, source=None,
               tol: float = 1e-8, max_iters: int = 50000,
               omega: float | None = None, initial: np.ndarray | None = None,
               datum_name: str = "") -> GridSolution:
    """Projected red-black SOR for the thin-obstacle complementarity system.

    datum: callable on ambient points (N, n+1) fixing v on the box sides
    x_i = +-1 and the top y = 1.  obstacle: callable on (N, n) points of
    the y = 0 slice, or None for the unconstrained problem.  source:
    callable h(x) adding the coupling -2 int v h y^a.
    """
    p = mesh.params
    shape = mesh.shape
    pts = mesh.node_points()   # columns: x1[, x2], y
    pts_grid = pts.reshape(tuple(len(xs) for xs in mesh.xs) + (len(mesh.ys), -1))
    # reorder to (y, x1[, x2], coord)
    pts_grid = np.moveaxis(pts_grid, -2, 0)

    v = np.zeros(shape) if initial is None else initial.copy()
    dirichlet = np.zeros(shape, dtype=bool)
    dirichlet[-1, ...] = True
    for d in range(1, len(shape)):
        take_lo = [slice(None)] * len(shape)
        take_hi = [slice(None)] * len(shape)
        take_lo[d] = 0
        take_hi[d] = -1
        dirichlet[tuple(take_lo)] = True
        dirichlet[tuple(take_hi)] = True
    bpts = pts_grid[dirichlet]
    v[dirichlet] = datum(bpts)

    x_slice = pts_grid[0][..., :-1]
    phi = obstacle(x_slice.reshape(-1, p.n)).reshape(shape[1:]) if obstacle \
        else np.full(shape[1:], -np.inf)
    free0 = ~dirichlet[0]
    v[0][free0] = np.maximum(v[0][free0], phi[free0])

    q = None
    if source is not None:
        xall = pts_grid[..., :-1].reshape(-1, p.n)
        q = (source(xall).reshape(shape)) * mesh.node_measure

    diag = mesh.diagonal()
    red, black = _checker_masks(shape)
    active = ~dirichlet
    if omega is None:
        h_eff = 1.0 / max(s - 1 for s in shape)
        omega = 2.0 / (1.0 + np.sin(np.pi * h_eff))

    energies = []
    it = 0
    converged = False
    obstacle_row = np.zeros(shape, dtype=bool)
    obstacle_row[0] = free0
    phi_full = np.full(shape, -np.inf)
    phi_full[0] = phi
    qq = q if q is not None else 0.0

    for it in range(1, max_iters + 1):
        v_old_max = 0.0
        for mask in (red, black):
            upd = mask & active
            s = mesh.neighbor_sum(v)
            target = np.where(diag > 0, (s + qq) / np.where(diag > 0, diag, 1.0), 0.0)
            vnew = v + omega * (target - v)
            vnew = np.where(obstacle_row, np.maximum(vnew, phi_full), vnew)
            delta = np.where(upd, vnew - v, 0.0)
            v_old_max = max(v_old_max, float(np.max(np.abs(delta))))
            v = np.where(upd, vnew, v)
        energies.append(mesh.energy(v, q))
        if v_old_max < tol:
            converged = True
            break

    return GridSolution(mesh=mesh, values=v, obstacle=phi, source=q, tol=tol,
                        iterations=it, converged=converged,
                        energy_history=np.array(energies), datum_name=datum_name)


def solve_nested(p: Params, datum, obstacle=None, source=None, nx: int = 256,
                 ny: int | None = None, tol: float = 1e-8, max_iters: int = 50000,
                 levels: int = 3, enable_n2: bool = False,
                 datum_name: str = "") -> GridSolution:
    """Nested iteration: solve on coarsened grids first, interpolate up."""
    sizes = [max(16, nx // 2**k) for k in range(levels - 1, 0, -1)] + [nx]
    sol = None
    for k, size in enumerate(sizes):
        mesh = build_mesh(p, nx=size, ny=None if ny is None else max(16, ny // 2**(levels - 1 - k)),
                          enable_n2=enable_n2)
        init = None
        if sol is not None:
            init = _interpolate_to(sol, mesh)
        sol = solve_psor(mesh, datum, obstacle, source, tol=tol,
                         max_iters=max_iters, initial=init, datum_name=datum_name)
    return sol


def _interpolate_to(sol: GridSolution, mesh: Mesh) -> np.ndarray:
    gf = GridField(sol)
    pts = mesh.node_points()
    vals = gf.values(pts)
    shape_xy = tuple(len(xs) for xs in mesh.xs) + (len(mesh.ys),)
    return np.moveaxis(vals.reshape(shape_xy), -1, 0)


class GridField:
    """Even-in-y interpolant of a grid solution, with interpolated gradients."""

    def __init__(self, sol: GridSolution):
        self.sol = sol
        self.mesh = sol.mesh
        self._grad_nodes = None

    def _locate(self, coords: np.ndarray, axis_nodes: np.ndarray):
        idx = np.searchsorted(axis_nodes, coords, side="right") - 1
        idx = np.clip(idx, 0, axis_nodes.size - 2)
        frac = (coords - axis_nodes[idx]) / (axis_nodes[idx + 1] - axis_nodes[idx])
        return idx, np.clip(frac, 0.0, 1.0)

    def _interp(self, arr: np.ndarray, pts: np.ndarray) -> np.ndarray:
        mesh = self.mesh
        y = np.abs(pts[:, -1])
        jy, fy = self._locate(y, mesh.ys)
        idxs, fracs = [(jy, fy)], None
        for d, xs in enumerate(mesh.xs):
            idxs.append(self._locate(pts[:, d], xs))
        out = np.zeros(pts.shape[0])
        ndim = len(mesh.shape)
        for corner in range(2**ndim):
            weight = np.ones(pts.shape[0])
            index = []
            for d in range(ndim):
                bit = (corner >> d) & 1
                i_d, f_d = idxs[d]
                index.append(i_d + bit)
                weight = weight * (f_d if bit else (1.0 - f_d))
            out += weight * arr[tuple(index)]
        return out

    def values(self, pts: np.ndarray) -> np.ndarray:
        return self._interp(self.sol.values, np.asarray(pts, dtype=float))

    def _node_gradients(self) -> list[np.ndarray]:
        if self._grad_nodes is None:
            mesh = self.mesh
            v = self.sol.values
            grads = []
            coords = [mesh.ys] + list(mesh.xs)
            for axis in range(v.ndim):
                g = np.gradient(v, coords[axis], axis=axis, edge_order=2)
                grads.append(g)
            self._grad_nodes = grads
        return self._grad_nodes

    def gradient_values(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        grads = self._node_gradients()
        out = np.zeros_like(pts)
        # ambient order: x1[, x2], y; node axes: y, x1[, x2]
        for d in range(len(self.mesh.xs)):
            out[:, d] = self._interp(grads[d + 1], pts)
        gy = self._interp(grads[0], pts)
        out[:, -1] = gy * np.sign(pts[:, -1])
        return out


# ---------------------------------------------------------------------------
# Free boundary and classification
# ---------------------------------------------------------------------------

def extract_free_boundary(sol: GridSolution) -> np.ndarray:
    """Points on {y=0} where the contact indicator flips (n=1: x positions)."""
    contact = sol.contact_mask()
    xs = sol.mesh.xs[0]
    if sol.params.n == 1:
        flips = np.nonzero(contact[:-1] != contact[1:])[0]
        return 0.5 * (xs[flips] + xs[flips + 1])
    pts = []
    x2 = sol.mesh.xs[1]
    for j in range(contact.shape[1]):
        flips = np.nonzero(contact[:-1, j] != contact[1:, j])[0]
        for i in flips:
            pts.append([0.5 * (xs[i] + xs[i + 1]), x2[j]])
    return np.array(pts) if pts else np.zeros((0, 2))


@dataclass
class RescaledField:
    base: GridField
    x0: np.ndarray
    r: float
    denom: float

    def values(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        mapped = pts * self.r
        mapped[:, :-1] += self.x0[None, :]
        return self.base.values(mapped) / self.denom

    def gradient_values(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        mapped = pts * self.r
        mapped[:, :-1] += self.x0[None, :]
        return self.base.gradient_values(mapped) * (self.r / self.denom)


def rescale(sol: GridSolution, x0, r: float, mode: str = "homogeneous",
            lam: float | None = None, q: SphereQuadrature | None = None) -> RescaledField:
    """v(x0 + r., r.)/denom: denom = r^lam or the boundary-mass normalization."""
    p = sol.params
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    gf = GridField(sol)
    if mode == "homogeneous":
        if lam is None:
            raise ParameterError("homogeneous rescaling needs the exponent")
        denom = r**lam
    elif mode == "frequency":
        if q is None:
            q = build_sphere_quadrature(p, 24)
        pts = np.concatenate([x0, [0.0]])[None, :] + r * q.points
        h_val = r ** (p.n + p.a) * q.integrate(gf.values(pts) ** 2)
        if h_val <= 0.0:
            raise ParameterError("degenerate point: boundary mass vanishes")
        denom = np.sqrt(h_val / r ** (p.n + p.a))
    else:
        raise ParameterError(f"unknown rescaling mode {mode}")
    return RescaledField(base=gf, x0=x0, r=r, denom=denom)


@dataclass
class BlowupResult:
    x0: np.ndarray
    lam_hat: float
    kind: str                    # "regular" | "singular" | "other" | "inconclusive"
    m: int | None
    C: float | None
    e: np.ndarray | None
    polynomial: object | None    # Poly on (x, y) for singular points
    d_2m: int | None
    H0: float
    profile: object              # FrequencyProfile of the monitors
    fit_error: float


def monitor_radii(sol: GridSolution, x0, r_max: float = 0.5,
                  ratio: float = 0.9, count: int = 40) -> np.ndarray:
    """Geometric radii within [8 h, min(r_max, distance to the box sides)],
    h the coarsest axis resolution (below that, discretization noise wins)."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    lim = min([r_max] + [1.0 - abs(float(c)) for c in x0])
    r_min = 8.0 * sol.mesh.resolution_scale
    radii = geometric_radii(lim, ratio, count, r_min=r_min)
    if radii.size < 6:
        raise ParameterError("not enough resolvable radii at this grid size")
    return radii


def classify_point(sol: GridSolution, x0, basis: EigenBasis,
                   h_fn=None, k_reg: int = 2, gamma: float = 0.5,
                   gap_tol: float = 0.2, q: SphereQuadrature | None = None) -> BlowupResult:
    """Frequency estimate, blow-up fit, and tangent-defect dimension."""
    p = sol.params
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if q is None:
        q = build_sphere_quadrature(p, 24)
    gf = GridField(sol)
    radii = monitor_radii(sol, x0)
    prof = build_profile(gf, p, x0, radii, q, lam=1.0 + p.s, h_fn=h_fn,
                         phi_constant=0.0, pexp=0.5, k=k_reg, gamma=gamma,
                         fd_step=0.25 * sol.mesh.min_cell)
    # the frequency limit comes from the bare monitor (the calibrated
    # constant rescales by 1 + C r^p, same limit but poorly extrapolable);
    # the innermost point carries a one-sided stencil and is dropped
    phi0 = extrapolate_to_zero(prof.radii, prof.Phi, drop_smallest=1)
    lam_hat = (phi0 - (p.n + p.a)) / 2.0
    c_cal = calibrate_frequency_constant(prof.radii, prof.H, p, 0.5, k_reg, gamma,
                                         tol=None)
    if c_cal != 0.0 and np.isfinite(c_cal):
        prof = build_profile(gf, p, x0, radii, q, lam=1.0 + p.s, h_fn=h_fn,
                             phi_constant=c_cal, pexp=0.5, k=k_reg, gamma=gamma,
                             fd_step=0.25 * sol.mesh.min_cell)
    prof.meta["phi_constant"] = c_cal
    h_ratio = prof.H / prof.radii ** (p.n + p.a + 2.0 * lam_hat)
    h0 = extrapolate_to_zero(prof.radii, h_ratio)

    r_fit = prof.radii[min(len(prof.radii) - 1, len(prof.radii) * 3 // 4)]
    pts = np.concatenate([x0, [0.0]])[None, :] + r_fit * q.points

    if h0 <= 0 or not np.isfinite(lam_hat):
        return BlowupResult(x0=x0, lam_hat=lam_hat, kind="inconclusive", m=None,
                            C=None, e=None, polynomial=None, d_2m=None, H0=h0,
                            profile=prof, fit_error=np.nan)

    if abs(lam_hat - (1.0 + p.s)) < gap_tol:
        from .profiles import RegularProfile
        vals = gf.values(pts) / r_fit ** (1.0 + p.s)
        best = None
        for e_dir in _candidate_directions(p.n):
            hprof = RegularProfile(tuple(e_dir), p.s)
            hv = hprof.values(q.points)
            denom = q.integrate(hv * hv)
            c_fit = q.integrate(vals * hv) / denom
            err = q.integrate((vals - c_fit * hv) ** 2)
            if best is None or err < best[0]:
                best = (err, c_fit, np.asarray(e_dir))
        err, c_fit, e_dir = best
        rel = np.sqrt(err / max(q.integrate(vals**2), 1e-300))
        return BlowupResult(x0=x0, lam_hat=lam_hat, kind="regular", m=None,
                            C=c_fit, e=e_dir, polynomial=None, d_2m=None,
                            H0=h0, profile=prof, fit_error=rel)

    m_guess = int(round(lam_hat / 2.0))
    if m_guess >= 1 and abs(lam_hat - 2.0 * m_guess) < gap_tol:
        vals = gf.values(pts) / r_fit ** (2.0 * m_guess)
        idx = basis.indices_of_degree(2 * m_guess)
        coefs = np.zeros(len(idx))
        for kk, k_mode in enumerate(idx):
            mv = basis.modes[k_mode].values(q.points)
            coefs[kk] = q.integrate(vals * mv)
        from .polys import Poly
        poly = Poly(p.n + 1)
        for c_k, k_mode in zip(coefs, idx):
            poly = poly + basis.modes[k_mode].trace_poly.scale(float(c_k))
        d2m = tangent_defect_dimension(poly, p.n)
        recon = sum(c_k * basis.modes[k_mode].values(q.points)
                    for c_k, k_mode in zip(coefs, idx))
        rel = np.sqrt(q.integrate((vals - recon) ** 2)
                      / max(q.integrate(vals**2), 1e-300))
        return BlowupResult(x0=x0, lam_hat=lam_hat, kind="singular", m=m_guess,
                            C=None, e=None, polynomial=poly, d_2m=d2m, H0=h0,
                            profile=prof, fit_error=rel)

    return BlowupResult(x0=x0, lam_hat=lam_hat, kind="other", m=None, C=None,
                        e=None, polynomial=None, d_2m=None, H0=h0,
                        profile=prof, fit_error=np.nan)


def _candidate_directions(n: int, count: int = 64):
    if n == 1:
        return [np.array([1.0]), np.array([-1.0])]
    ang = 2.0 * np.pi * np.arange(count) / count
    return [np.array([np.cos(t), np.sin(t)]) for t in ang]


def tangent_defect_dimension(poly, n: int, tol: float = 1e-6) -> int:
    """dim of directions xi with xi . grad_x p(x, 0) identically zero.

    Columns of the coefficient matrix are the partial-derivative
    polynomials of the y = 0 trace; the defect is n - rank.
    """
    trace = poly.trace_y0()
    cols = {}
    rows = set()
    for i in range(n):
        d = trace.diff(i)
        cols[i] = d
        rows.update(d.coeffs.keys())
    rows = sorted(rows)
    if not rows:
        return n
    mat = np.zeros((len(rows), n))
    for i in range(n):
        for rk, key in enumerate(rows):
            mat[rk, i] = float(cols[i].coeffs.get(key, 0.0))
    scale = np.max(np.abs(mat))
    if scale == 0.0:
        return n
    rank = np.linalg.matrix_rank(mat, tol=tol * scale)
    return n - rank


# ---------------------------------------------------------------------------
# Decay and nondegeneracy monitors
# ---------------------------------------------------------------------------

def decay_monitors(sol: GridSolution, x0, lam: float, h_fn=None,
                   k_reg: int = 2, gamma: float = 0.5,
                   q: SphereQuadrature | None = None) -> dict:
    """Fit the monitored decays; never raises on poor fits."""
    p = sol.params
    if q is None:
        q = build_sphere_quadrature(p, 24)
    gf = GridField(sol)
    radii = monitor_radii(sol, x0)
    prof = build_profile(gf, p, np.atleast_1d(np.asarray(x0, float)), radii, q,
                         lam=lam, h_fn=h_fn, pexp=0.5, k=k_reg, gamma=gamma,
                         fd_step=0.25 * sol.mesh.min_cell)
    # calibrate the frequency constant with the noise-tolerant monotonicity
    # test; the reported profile carries the calibrated monitor
    from .weiss import generalized_frequency, monotone_up_to_fd_error
    c_phi = float("inf")
    for cand in [0.0] + [2.0**j for j in range(-6, 16)]:
        phi_c = generalized_frequency(prof.radii, prof.H, p, cand, 0.5, k_reg, gamma)
        if monotone_up_to_fd_error(prof.radii, phi_c):
            c_phi = cand
            prof.Phi = phi_c
            break
    prof.meta["phi_constant"] = c_phi

    out = {"profile": prof, "lambda": lam, "phi_constant": c_phi}
    w = prof.Wmod
    out["w_max_abs"] = float(np.max(np.abs(w)))
    pos = w > 1e-14
    if pos.sum() >= 4:
        lr, lw = np.log(prof.radii[pos]), np.log(w[pos])
        coef, res = np.polyfit(lr, lw, 1, full=True)[:2]
        out["w_decay_exponent"] = float(coef[0])
        ss_tot = float(np.sum((lw - lw.mean()) ** 2))
        out["w_fit_quality"] = (1.0 - float(res[0]) / ss_tot) if (len(res) and ss_tot > 0) \
            else 1.0
    else:
        out["w_decay_exponent"] = float("nan")
        out["w_fit_quality"] = 0.0
    hr = prof.H / prof.radii ** (p.n + p.a + 2.0 * lam)
    out["h_ratio_nondecreasing"] = monotone_up_to_fd_error(prof.radii, hr)
    out["h_ratio_values"] = hr
    # smallest dyadic constant making W + C r^{k+gamma-lam} nondecreasing
    expo = k_reg + gamma - lam
    for cand in [0.0] + [2.0**j for j in range(-10, 16)]:
        series = w + cand * prof.radii**expo
        if monotone_up_to_fd_error(prof.radii, series):
            out["wmod_monotone_constant"] = cand
            break
    else:
        out["wmod_monotone_constant"] = float("inf")
    out["phi_monotone"] = bool(np.isfinite(out["phi_constant"]))
    return out

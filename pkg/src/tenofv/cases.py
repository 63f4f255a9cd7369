"""Benchmark catalog: initial conditions, meshes, boundaries, end times,
exact solutions, error norms, and the 1D reference-profile loader.

Conventions used throughout:
  * initial_condition(x, y) is vectorized and returns conservative states
    with shape x.shape + (n_comp,);
  * Euler shock-tube cases run in a vertical tube, so the 1D axis of the
    original problem statements maps to our y and the 1D velocity to v;
  * build_mesh(h, paper_scale) returns a fully built mesh (geometry included,
    4-point face quadrature) with boundary patches tagged and periodic pairs
    already merged.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .euler import GAMMA, prim_to_cons
from .mesh import (
    Mesh,
    apply_periodic,
    cell_subtriangles,
    compute_geometry,
    generate_disk_mesh,
    generate_uniform_quad_mesh,
    generate_uniform_tri_mesh,
    split_patch,
    triangle_ref_quad,
)
from .solver import BoundaryCondition, FieldState, make_inflow

Array = np.ndarray


class CaseError(Exception):
    pass


@dataclass(frozen=True)
class CaseSpec:
    name: str
    equations: str                 # "advection" | "euler"
    t_end: float
    default_h: float
    build_mesh: object             # (h or None, paper_scale) -> Mesh
    initial_condition: object      # (x, y) -> (..., n_comp) conservative
    make_boundaries: object        # Mesh -> {patch: BoundaryCondition}
    discontinuous: bool
    exact: object | None = None    # (x, y, t) -> (..., n_comp)
    velocity: object | None = None
    reference: str | None = None


@dataclass
class ErrorReport:
    l_inf: Array                   # (n_comp,)
    l_2: Array                     # (n_comp,)
    n_cells: int


# ---------------------------------------------------------------------------
# mesh recipes


def _periodic_unit_tri(n, domain=((0.0, 0.0), (1.0, 1.0))):
    mesh = generate_uniform_tri_mesh(n, n, domain=domain)
    (x0, y0), (x1, y1) = domain
    apply_periodic(mesh, "left", "right", (x1 - x0, 0.0))
    apply_periodic(mesh, "bottom", "top", (0.0, y1 - y0))
    compute_geometry(mesh, quad_order=4)
    return mesh


def _advection_mesh(h, paper_scale):
    n = round(1.0 / (h or 1.0 / 20.0))
    return _periodic_unit_tri(n)


def _rotation_mesh(h, paper_scale):
    n = round(1.0 / (h or 1.0 / 80.0))
    return _periodic_unit_tri(n)


def _tube_mesh(h, paper_scale):
    h = h or 1.0 / 100.0
    nx, ny = round(0.2 / h), round(1.0 / h)
    mesh = generate_uniform_quad_mesh(nx, ny, domain=((0.0, 0.0), (0.2, 1.0)))
    compute_geometry(mesh, quad_order=4)
    return mesh


def _shu_osher_mesh(h, paper_scale):
    h = h or 1.0 / 20.0
    nx, ny = round(2.0 / h), round(10.0 / h)
    mesh = generate_uniform_tri_mesh(nx, ny, domain=((0.0, 0.0), (2.0, 10.0)))
    apply_periodic(mesh, "left", "right", (2.0, 0.0))
    compute_geometry(mesh, quad_order=4)
    return mesh


def _disk_mesh(h, paper_scale):
    n = round(1.0 / (h or 1.0 / 50.0))
    mesh = generate_disk_mesh(n, radius=1.0, center=(1.0, 1.0))
    compute_geometry(mesh, quad_order=4)
    return mesh


def _khi_mesh(h, paper_scale):
    if h is None:
        h = 1.0 / 500.0 if paper_scale else 1.0 / 128.0
    n = round(1.0 / h)
    return _periodic_unit_tri(n, domain=((-0.5, -0.5), (0.5, 0.5)))


def _dmr_mesh(h, paper_scale):
    if h is None:
        h = 1.0 / 280.0 if paper_scale else 1.0 / 60.0
    nx, ny = round(4.0 / h), round(1.0 / h)
    mesh = generate_uniform_tri_mesh(nx, ny, domain=((0.0, 0.0), (4.0, 1.0)))
    compute_geometry(mesh, quad_order=4)
    return mesh


# ---------------------------------------------------------------------------
# initial conditions and exact solutions


def _adv_ic(x, y):
    return (np.sin(2 * np.pi * x) * np.sin(2 * np.pi * y))[..., None]


def _adv_exact(x, y, t):
    return _adv_ic(x - t, y - t)


def _rotation_bodies(x, y):
    """Cosine hump, sharp cone, and slotted cylinder, radius 0.15 each."""
    u = np.zeros_like(x, dtype=float)
    r = np.hypot(x - 0.25, y - 0.5)
    m = r <= 0.15
    u = np.where(m, 0.5 * (1.0 + np.cos(np.pi * np.minimum(r, 0.15) / 0.15)), u)
    r = np.hypot(x - 0.5, y - 0.25)
    m = r <= 0.15
    u = np.where(m, 1.0 - np.minimum(r, 0.15) / 0.15, u)
    r = np.hypot(x - 0.5, y - 0.75)
    m = (r <= 0.15) & ((np.abs(x - 0.5) >= 0.025) | (y >= 0.85))
    u = np.where(m, 1.0, u)
    return u[..., None]


def _rotation_exact(x, y, t):
    ct, st = np.cos(t), np.sin(t)
    dx, dy = x - 0.5, y - 0.5
    return _rotation_bodies(0.5 + ct * dx + st * dy, 0.5 - st * dx + ct * dy)


def _rotation_velocity(x, y):
    return 0.5 - y, x - 0.5


def _tube_ic(left, right, y_d):
    lc = prim_to_cons(np.asarray(left, dtype=float))
    rc = prim_to_cons(np.asarray(right, dtype=float))

    def ic(x, y):
        sel = (np.asarray(y) < y_d)[..., None]
        return np.where(sel, lc, rc)
    return ic


_SHU_POST = (3.857, 0.0, 2.629, 10.333)


def _shu_osher_ic(x, y):
    rho = np.where(y < 1.0, 3.857, 1.0 + 0.2 * np.sin(5.0 * (y - 5.0)))
    v = np.where(y < 1.0, 2.629, 0.0)
    p = np.where(y < 1.0, 10.333, 1.0)
    prim = np.stack([rho, np.zeros_like(rho), v, p], axis=-1)
    return prim_to_cons(prim)


def _explosion_ic(inner, outer):
    ic_in = prim_to_cons(np.asarray(inner, dtype=float))
    ic_out = prim_to_cons(np.asarray(outer, dtype=float))

    def ic(x, y):
        sel = (np.hypot(np.asarray(x) - 1.0, np.asarray(y) - 1.0) <= 0.5)[..., None]
        return np.where(sel, ic_in, ic_out)
    return ic


def _khi_ic(x, y):
    inner = np.abs(y) <= 0.25
    rho = np.where(inner, 2.0, 1.0)
    u = np.where(inner, -0.5, 0.5)
    v = 0.01 * np.sin(2 * np.pi * x)
    p = np.full_like(rho, 2.5)
    return prim_to_cons(np.stack([rho, u, v, p], axis=-1))


DMR_POST = (8.0, 7.145, -4.125, 116.8333)
DMR_PRE = (1.4, 0.0, 0.0, 1.0)
DMR_X0 = 0.1667
_SQRT3 = math.sqrt(3.0)


def dmr_shock_x(t, y=1.0):
    """Abscissa of the Mach-10 shock on the line of height y at time t."""
    return DMR_X0 + (y + 20.0 * t) / _SQRT3


def _dmr_ic(x, y):
    post = prim_to_cons(np.asarray(DMR_POST))
    pre = prim_to_cons(np.asarray(DMR_PRE))
    sel = (np.asarray(x) < DMR_X0 + np.asarray(y) / _SQRT3)[..., None]
    return np.where(sel, post, pre)


def _dmr_top(x, y, t):
    post = prim_to_cons(np.asarray(DMR_POST))
    pre = prim_to_cons(np.asarray(DMR_PRE))
    sel = (np.asarray(x) < dmr_shock_x(t))[..., None]
    return np.where(sel, post, pre)


# ---------------------------------------------------------------------------
# boundary sets


def _no_boundaries(mesh):
    return {}


def _all_transmissive(mesh):
    return {p: BoundaryCondition("transmissive-outflow")
            for p in mesh.boundary_patches}


def _shu_osher_boundaries(mesh):
    return {
        "bottom": make_inflow(_SHU_POST),
        "top": BoundaryCondition("transmissive-outflow"),
    }


def _dmr_boundaries(mesh):
    split_patch(mesh, "bottom", lambda x, y: x < DMR_X0,
                "bottom-post", "bottom-wall")
    return {
        "left": make_inflow(DMR_POST),
        "right": BoundaryCondition("transmissive-outflow"),
        "bottom-post": make_inflow(DMR_POST),
        "bottom-wall": BoundaryCondition("reflective-wall"),
        "top": BoundaryCondition("time-dependent-dirichlet", fn=_dmr_top),
    }


# ---------------------------------------------------------------------------
# catalog


def case_catalog() -> list:
    return [
        CaseSpec(
            name="advection", equations="advection", t_end=1.0,
            default_h=1.0 / 20.0, build_mesh=_advection_mesh,
            initial_condition=_adv_ic, make_boundaries=_no_boundaries,
            discontinuous=False, exact=_adv_exact,
            velocity=lambda x, y: (np.ones_like(x), np.ones_like(x))),
        CaseSpec(
            name="rotation", equations="advection", t_end=2.0 * math.pi,
            default_h=1.0 / 80.0, build_mesh=_rotation_mesh,
            initial_condition=_rotation_bodies,
            make_boundaries=_no_boundaries, discontinuous=True,
            exact=_rotation_exact, velocity=_rotation_velocity),
        CaseSpec(
            name="st01", equations="euler", t_end=0.2, default_h=1.0 / 100.0,
            build_mesh=_tube_mesh,
            initial_condition=_tube_ic((1.0, 0.0, 0.0, 1.0),
                                       (0.125, 0.0, 0.0, 0.1), 0.5),
            make_boundaries=_all_transmissive, discontinuous=True),
        CaseSpec(
            name="st02", equations="euler", t_end=0.14, default_h=1.0 / 100.0,
            build_mesh=_tube_mesh,
            initial_condition=_tube_ic((0.445, 0.0, 0.698, 3.528),
                                       (0.5, 0.0, 0.0, 0.571), 0.5),
            make_boundaries=_all_transmissive, discontinuous=True),
        CaseSpec(
            name="st03", equations="euler", t_end=0.012, default_h=1.0 / 100.0,
            build_mesh=_tube_mesh,
            initial_condition=_tube_ic((1.0, 0.0, 0.0, 1000.0),
                                       (1.0, 0.0, 0.0, 0.1), 0.6),
            make_boundaries=_all_transmissive, discontinuous=True),
        CaseSpec(
            name="shu-osher", equations="euler", t_end=1.8,
            default_h=1.0 / 20.0, build_mesh=_shu_osher_mesh,
            initial_condition=_shu_osher_ic,
            make_boundaries=_shu_osher_boundaries, discontinuous=True,
            reference="shu_osher_ref.txt"),
        CaseSpec(
            name="ep01", equations="euler", t_end=0.2, default_h=1.0 / 50.0,
            build_mesh=_disk_mesh,
            initial_condition=_explosion_ic((1.0, 0.0, 0.0, 1.0),
                                            (0.125, 0.0, 0.0, 0.1)),
            make_boundaries=_all_transmissive, discontinuous=True),
        CaseSpec(
            name="ep02", equations="euler", t_end=0.2, default_h=1.0 / 50.0,
            build_mesh=_disk_mesh,
            initial_condition=_explosion_ic((1.0, 0.0, 0.0, 2.0),
                                            (1.0, 0.0, 0.0, 1.0)),
            make_boundaries=_all_transmissive, discontinuous=True),
        CaseSpec(
            name="khi", equations="euler", t_end=1.0, default_h=1.0 / 128.0,
            build_mesh=_khi_mesh, initial_condition=_khi_ic,
            make_boundaries=_no_boundaries, discontinuous=True),
        CaseSpec(
            name="dmr", equations="euler", t_end=0.2, default_h=1.0 / 60.0,
            build_mesh=_dmr_mesh, initial_condition=_dmr_ic,
            make_boundaries=_dmr_boundaries, discontinuous=True),
    ]


def get_case(name: str) -> CaseSpec:
    for c in case_catalog():
        if c.name == name:
            return c
    raise CaseError(f"unknown case {name!r}; available: "
                    + ", ".join(c.name for c in case_catalog()))


# ---------------------------------------------------------------------------
# initial-condition projection

# two midpoint subdivisions of the unit triangle: 16 equal-area children
def _sub16_centroids():
    def split(tri):
        a, b, c = tri
        ab, bc, ca = 0.5 * (a + b), 0.5 * (b + c), 0.5 * (c + a)
        return [(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)]

    unit = (np.array([0.0, 0.0]), np.array([1.0, 0.0]), np.array([0.0, 1.0]))
    kids = []
    for t in split(unit):
        kids.extend(split(t))
    return np.array([(a + b + c) / 3.0 for a, b, c in kids])


_SUB16 = _sub16_centroids()            # (16, 2) reference coordinates


def project_initial_condition(case: CaseSpec, mesh: Mesh,
                              degree: int = 10) -> FieldState:
    """Cell averages of the IC: Gauss rule for smooth data, 16-fold
    midpoint-subdivision averaging across discontinuities."""
    if case.discontinuous:
        pts_ref = _SUB16
        w_ref = np.full(16, 1.0 / 16.0)
    else:
        pts_ref, w_ref = triangle_ref_quad(degree)
        w_ref = w_ref / w_ref.sum()    # normalized: averages, not integrals
    nc = mesh.n_cells
    probe = case.initial_condition(np.zeros(1), np.zeros(1))
    n_comp = probe.shape[-1]
    u = np.zeros((nc, n_comp))
    for i in range(nc):
        acc = np.zeros(n_comp)
        vol = 0.0
        for tri in cell_subtriangles(mesh, i):
            J = np.stack([tri[1] - tri[0], tri[2] - tri[0]], axis=1)
            det = abs(float(np.linalg.det(J)))
            pts = tri[0] + pts_ref @ J.T
            vals = case.initial_condition(pts[:, 0], pts[:, 1])
            acc += det * (w_ref @ vals)
            vol += det
        u[i] = acc / vol
    return FieldState(u)


def exact_cell_averages(case: CaseSpec, mesh: Mesh, t: float,
                        degree: int = 10) -> Array:
    """Exact-solution averages via the same rule as the IC projection."""
    if case.exact is None:
        raise CaseError(f"case {case.name!r} has no exact solution")
    shifted = CaseSpec(
        name=case.name, equations=case.equations, t_end=case.t_end,
        default_h=case.default_h, build_mesh=case.build_mesh,
        initial_condition=lambda x, y: case.exact(x, y, t),
        make_boundaries=case.make_boundaries,
        discontinuous=case.discontinuous)
    return project_initial_condition(shifted, mesh, degree=degree).u


# ---------------------------------------------------------------------------
# error norms and convergence orders


def error_norms(numerical: FieldState, case: CaseSpec, mesh: Mesh,
                t: float | None = None, degree: int = 10) -> ErrorReport:
    t = numerical.t if t is None else t
    exact = exact_cell_averages(case, mesh, t, degree=degree)
    e = numerical.u - exact
    vol = mesh.cell_vol
    l_inf = np.abs(e).max(axis=0)
    l_2 = np.sqrt((vol[:, None] * e ** 2).sum(axis=0) / vol.sum())
    return ErrorReport(l_inf=l_inf, l_2=l_2, n_cells=mesh.n_cells)


def convergence_order(e_fine: float, e_coarse: float,
                      ne_fine: int, ne_coarse: int) -> float:
    """2D observed order from errors at two cell counts."""
    return -2.0 * math.log(e_fine / e_coarse) / math.log(ne_fine / ne_coarse)


# ---------------------------------------------------------------------------
# run assembly


def setup_case(case: CaseSpec, scheme, h: float | None = None,
               paper_scale: bool = False, op_set=None, gamma: float = GAMMA):
    """Mesh + discretization + projected initial state for one case."""
    from .solver import Discretization

    mesh = case.build_mesh(h, paper_scale)
    bcs = case.make_boundaries(mesh)
    disc = Discretization(mesh, scheme, case.equations, bcs=bcs,
                          velocity=case.velocity, gamma=gamma, op_set=op_set)
    state = project_initial_condition(case, mesh, degree=max(2 * scheme.r, 4))
    return mesh, disc, state


# ---------------------------------------------------------------------------
# 1D reference profiles


def reference_profile_1d(case: CaseSpec):
    """Committed high-resolution (x, rho) curve for profile comparisons."""
    if case.reference is None:
        raise CaseError(f"case {case.name!r} has no 1D reference profile")
    res = resources.files("tenofv.data") / case.reference
    if not res.is_file():
        raise CaseError(f"reference file {case.reference!r} is missing")
    with resources.as_file(res) as path:
        data = np.loadtxt(path, comments="#")
    return data[:, 0], data[:, 1]

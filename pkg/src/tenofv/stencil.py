"""Candidate stencils and least-squares reconstruction operators.

A reconstruction polynomial on cell 0 is P = Ubar_0 + sum_l a_l psi_l with
psi_l = phi_l - mean(phi_l over the reference cell V'_0) and phi_l the
non-constant monomials of total degree 1..r in reference coordinates. The
coefficients solve the overdetermined system A a = b in the least-squares
sense, A_sl = integral of psi_l over member cell s (in the target's
reference frame), b_s = |V'_s| (Ubar_s - Ubar_0), via Householder QR.

The smoothness indicator is beta = a^T B a with
B_lm = sum_{q=1..r} sum_{|alpha|=q} integral over V'_0 of
D^alpha phi_l * D^alpha phi_m, unit weights, no mesh-size rescaling
(reference-space integration absorbs the h-scaling).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .mesh import (
    Mesh,
    cell_subtriangles,
    triangle_monomial_integral,
    triangle_ref_quad,
)

Array = np.ndarray

COND_WARN_THRESHOLD = 1e8
_ASSEMBLY_CHUNK = 4096


class StencilError(Exception):
    """Stencil growth or operator assembly failure."""


def n_monomials(r: int, nd: int) -> int:
    """(1/nd!) * prod_{m=1..nd} (r+m); includes the constant term."""
    if r < 0 or nd not in (1, 2, 3):
        raise ValueError(f"invalid degree/dimension ({r}, {nd})")
    out = 1
    for m in range(1, nd + 1):
        out *= r + m
    return out // math.factorial(nd)


def monomial_exponents(r: int) -> Array:
    """Exponent pairs of the non-constant 2D monomials, graded order.

    Degree 1..r; within a degree the xi power descends: for r=2 the basis
    order is xi, eta, xi^2, xi*eta, eta^2.
    """
    out = []
    for d in range(1, r + 1):
        for a in range(d, -1, -1):
            out.append((a, d - a))
    return np.asarray(out, dtype=np.int64)


def eval_monomials(exps: Array, pts: Array) -> Array:
    """phi values at reference points: (n_pts, n_terms)."""
    pts = np.atleast_2d(pts)
    rmax = int(exps.max())
    xp = np.ones((len(pts), rmax + 1))
    yp = np.ones((len(pts), rmax + 1))
    for k in range(1, rmax + 1):
        np.multiply(xp[:, k - 1], pts[:, 0], out=xp[:, k])
        np.multiply(yp[:, k - 1], pts[:, 1], out=yp[:, k])
    return xp[:, exps[:, 0]] * yp[:, exps[:, 1]]


# ---------------------------------------------------------------------------
# reference-cell shape classes
#
# The reference cell V'_0 is the unit triangle for triangles. A quad maps to
# the polygon (0,0),(1,0),(0,1) plus the image of its fourth vertex, so the
# monomial means and smoothness forms depend only on that image point;
# congruent cells share one class.

@dataclass
class ShapeClass:
    ref_tris: list          # list of (3,2) vertex arrays in reference coords
    volume: float           # |V'_0|
    means: dict             # r -> (N_u,) monomial means over V'_0
    forms: dict             # r -> (N_u, N_u) smoothness quadratic form

    def mean_vector(self, r: int) -> Array:
        if r not in self.means:
            self.means[r] = _monomial_means(self.ref_tris, self.volume, r)
        return self.means[r]

    def smoothness_form(self, r: int) -> Array:
        if r not in self.forms:
            self.forms[r] = _smoothness_form(self.ref_tris, r)
        return self.forms[r]


_UNIT_TRI = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


def _tri_integrate(ref_tris, values_fn, degree):
    """Integrate values_fn(points)->(n_pts, ...) over a list of triangles."""
    pts_ref, w_ref = triangle_ref_quad(degree)
    total = None
    for tri in ref_tris:
        J = np.stack([tri[1] - tri[0], tri[2] - tri[0]], axis=1)
        det = abs(J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0])
        vals = values_fn(tri[0] + pts_ref @ J.T)
        contrib = np.tensordot(w_ref * det, vals, axes=(0, 0))
        total = contrib if total is None else total + contrib
    return total


def _monomial_means(ref_tris, volume, r):
    exps = monomial_exponents(r)
    if len(ref_tris) == 1 and np.array_equal(ref_tris[0], _UNIT_TRI):
        vals = np.array([triangle_monomial_integral(a, b) for a, b in exps])
        return vals / 0.5
    ints = _tri_integrate(ref_tris, lambda p: eval_monomials(exps, p), int(exps[:, 0].max() + exps[:, 1].max()))
    return ints / volume


def _falling(a: int, p: int) -> float:
    out = 1.0
    for k in range(p):
        out *= a - k
    return out


def _smoothness_form(ref_tris, r):
    """B_lm = sum over derivative multi-indices of integral(D phi_l D phi_m)."""
    exps = monomial_exponents(r)
    nu = len(exps)
    B = np.zeros((nu, nu))
    # pairwise monomial integrals up to degree 2r, memoized per exponent pair
    cache = {}

    def mono_int(a, b):
        if (a, b) not in cache:
            if len(ref_tris) == 1 and np.array_equal(ref_tris[0], _UNIT_TRI):
                cache[(a, b)] = triangle_monomial_integral(a, b)
            else:
                cache[(a, b)] = float(_tri_integrate(
                    ref_tris, lambda p: eval_monomials(np.array([[a, b]]), p)[:, 0], a + b))
        return cache[(a, b)]

    for q in range(1, r + 1):
        for p in range(q + 1):   # alpha = (p, q-p)
            qq = q - p
            coeff = np.array([_falling(a, p) * _falling(b, qq) if a >= p and b >= qq else 0.0
                              for a, b in exps])
            rema = exps[:, 0] - p
            remb = exps[:, 1] - qq
            for l in range(nu):
                if coeff[l] == 0.0:
                    continue
                for m in range(l, nu):
                    if coeff[m] == 0.0:
                        continue
                    val = coeff[l] * coeff[m] * mono_int(
                        int(rema[l] + rema[m]), int(remb[l] + remb[m]))
                    B[l, m] += val
                    if m != l:
                        B[m, l] += val
    return B


def shape_classes(mesh: Mesh) -> tuple:
    """Deduplicate per-cell reference shapes; returns (classes, cell_class)."""
    classes: list = []
    keys: dict = {}
    cell_class = np.empty(mesh.n_cells, dtype=np.int64)
    for i in range(mesh.n_cells):
        if mesh.cell_kind[i] == 3:
            key = ("tri",)
            ref_tris = [_UNIT_TRI]
            vol = 0.5
        else:
            p3 = mesh.verts[mesh.cell_verts[i, 3]]
            ref_p3 = mesh.cell_Jinv[i] @ (p3 - mesh.cell_v0[i])
            key = ("quad", round(ref_p3[0], 12), round(ref_p3[1], 12))
            ref_tris = [_UNIT_TRI,
                        np.array([[0.0, 0.0], [0.0, 1.0], [ref_p3[0], ref_p3[1]]])]
            vol = mesh.cell_vol[i] / mesh.cell_detJ[i]
        if key not in keys:
            keys[key] = len(classes)
            classes.append(ShapeClass(ref_tris=ref_tris, volume=vol, means={}, forms={}))
        cell_class[i] = keys[key]
    return classes, cell_class


# ---------------------------------------------------------------------------
# stencil growth

@dataclass
class Stencil:
    target: int
    members: Array        # cell ids, target first
    shifts: Array         # (n, 2) periodic frame offsets, target row = 0
    kind: str             # "central" or "directional"
    face: int             # owning face id for directional stencils, else -1
    r: int

    @property
    def n_members(self) -> int:
        return len(self.members)


def _required_members(r: int) -> int:
    """Total member count including the target: 2*(N_k - 1) + 1."""
    return 2 * (n_monomials(r, 2) - 1) + 1


def _neighbors_with_shift(mesh: Mesh, cell: int, shift):
    out = []
    for f in mesh.cell_faces[cell]:
        if f < 0:
            continue
        l, r = mesh.face_cells[f]
        if l == cell and r >= 0:
            out.append((int(r), (shift[0] - mesh.face_shift[f, 0],
                                 shift[1] - mesh.face_shift[f, 1]), int(f)))
        elif r == cell:
            out.append((int(l), (shift[0] + mesh.face_shift[f, 0],
                                 shift[1] + mesh.face_shift[f, 1]), int(f)))
    return out


def _sorted_members(mesh, target, found):
    """Order non-target members by distance from target centroid, then id."""
    cen0 = mesh.cell_cen[target]
    rows = []
    for cid, shift in found.items():
        if cid == target:
            continue
        pos = mesh.cell_cen[cid] + shift
        d = float(np.hypot(pos[0] - cen0[0], pos[1] - cen0[1]))
        rows.append((d, cid, shift))
    rows.sort(key=lambda t: (t[0], t[1]))
    members = np.array([target] + [cid for _, cid, _ in rows], dtype=np.int64)
    shifts = np.vstack([[0.0, 0.0]] + [s for _, _, s in rows])
    return members, shifts


def build_central_stencil(mesh: Mesh, cell: int, r: int) -> Stencil:
    """Breadth-first growth over whole face-neighbor rings.

    Stops once the member count (target included) reaches 2*(N_k-1)+1;
    overshoot from the last ring is kept.
    """
    need = _required_members(r)
    found = {cell: (0.0, 0.0)}
    ring = [cell]
    while len(found) < need:
        nxt = []
        for c in ring:
            for (nb, shift, _) in _neighbors_with_shift(mesh, c, found[c]):
                if nb not in found:
                    found[nb] = shift
                    nxt.append(nb)
        if not nxt:
            raise StencilError(
                f"cell {cell}: central stencil needs {need} members, "
                f"only {len(found)} reachable")
        ring = nxt
    members, shifts = _sorted_members(mesh, cell, found)
    return Stencil(target=cell, members=members, shifts=shifts,
                   kind="central", face=-1, r=r)


def build_directional_stencils(mesh: Mesh, cell: int, r: int,
                               sector_cos: float = math.cos(math.radians(80.0))) -> list:
    """One stencil per face, biased into the face-normal sector.

    The face neighbor seeds the stencil unconditionally; further candidates
    must satisfy (c - x_target) . n > cos(80 deg) * |c - x_target|. Growth is
    by whole rings through admissible cells; if the admissible frontier
    starves before the size rule is met, growth continues unrestricted.
    """
    out = []
    for slot in range(int(mesh.cell_kind[cell])):
        f = int(mesh.cell_faces[cell, slot])
        out.append(_grow_directional(mesh, cell, f, r, sector_cos))
    return out


def _grow_directional(mesh: Mesh, cell: int, f: int, r: int,
                      sector_cos: float | None) -> Stencil:
    """Grow one face-sector stencil; sector_cos None grows unrestricted."""
    need = _required_members(r)
    cen0 = mesh.cell_cen[cell]
    n = mesh.face_normal[f].copy()
    if mesh.face_cells[f, 0] != cell:
        n = -n

    def admissible(cid, shift):
        d = mesh.cell_cen[cid] + shift - cen0
        nrm = math.hypot(d[0], d[1])
        return d[0] * n[0] + d[1] * n[1] > sector_cos * nrm

    # the face neighbor (when the face is interior) seeds unconditionally
    found = {cell: (0.0, 0.0)}
    for (nb, shift, ff) in _neighbors_with_shift(mesh, cell, (0.0, 0.0)):
        if ff == f:
            found[nb] = shift
    ring = [c for c in found]
    restricted = sector_cos is not None
    while len(found) < need:
        nxt = []
        for c in ring:
            for (nb, shift, _) in _neighbors_with_shift(mesh, c, found[c]):
                if nb in found:
                    continue
                if restricted and not admissible(nb, shift):
                    continue
                found[nb] = shift
                nxt.append(nb)
        if not nxt:
            if restricted:
                restricted = False   # sector starved: fall back to nearest rings
                ring = list(found)
                continue
            raise StencilError(
                f"cell {cell} face {f}: directional stencil needs {need} "
                f"members, only {len(found)} reachable")
        ring = nxt
    members, shifts = _sorted_members(mesh, cell, found)
    return Stencil(target=cell, members=members, shifts=shifts,
                   kind="directional", face=f, r=r)


# ---------------------------------------------------------------------------
# operator assembly

@dataclass
class ReconOperator:
    stencil: Stencil
    A: Array                # (n_s, N_u) basis integrals over member cells
    Ahat: Array             # (N_u, n_s) pseudo-inverse
    member_volumes: Array   # (n_s,) |V'_s|
    B: Array                # (N_u, N_u) smoothness form
    means: Array            # (N_u,) monomial means over V'_0
    face_psi: Array         # (K, nq, N_u) basis at target-face quadrature points
    cond: float


def _member_subtri_table(mesh: Mesh, members: Array, shifts: Array):
    """Flatten member cells into sub-triangle affine maps (v0, J, |det|)."""
    v0s, Js, dets, owner = [], [], [], []
    for row, (cid, sh) in enumerate(zip(members, shifts)):
        for tri in cell_subtriangles(mesh, int(cid)):
            J = np.stack([tri[1] - tri[0], tri[2] - tri[0]], axis=1)
            v0s.append(tri[0] + sh)
            Js.append(J)
            dets.append(abs(J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]))
            owner.append(row)
    return (np.asarray(v0s), np.asarray(Js), np.asarray(dets),
            np.asarray(owner, dtype=np.int64))


def _basis_integral_rows(mesh: Mesh, target: int, members: Array,
                         shifts: Array, r: int, means: Array) -> tuple:
    """A rows: integral of psi_l over each member cell, target frame.

    Returns (A (n_memb, N_u), member reference volumes (n_memb,)).
    """
    exps = monomial_exponents(r)
    pts_ref, w_ref = triangle_ref_quad(2 * r)
    Jinv0 = mesh.cell_Jinv[target]
    det0 = mesh.cell_detJ[target]
    v00 = mesh.cell_v0[target]
    v0s, Js, dets, owner = _member_subtri_table(mesh, members, shifts)
    # composite affine into the target's reference frame
    C = np.einsum("ab,sbc->sac", Jinv0, Js)
    d = (v0s - v00) @ Jinv0.T
    pts = np.einsum("sab,qb->sqa", C, pts_ref) + d[:, None, :]
    phi = eval_monomials(exps, pts.reshape(-1, 2)).reshape(len(v0s), len(w_ref), -1)
    sub_int = np.einsum("q,sql->sl", w_ref, phi) * (dets / det0)[:, None]
    n_memb = len(members)
    A = np.zeros((n_memb, len(exps)))
    np.add.at(A, owner, sub_int)
    vols = mesh.cell_vol[np.asarray(members, dtype=np.int64)] / det0
    A -= vols[:, None] * means[None, :]
    return A, vols


def _pseudo_inverse(A: Array) -> tuple:
    """Householder-QR least-squares inverse: Ahat = R^-1 Q^T."""
    Q, R = np.linalg.qr(A)
    diag = np.abs(np.diag(R))
    if diag.min() <= diag.max() * 1e-13:
        raise StencilError("rank-deficient stencil system")
    cond = float(np.linalg.cond(R))
    Ahat = np.linalg.solve(R, Q.T)
    return Ahat, cond


def assemble_operator(mesh: Mesh, stencil: Stencil,
                      classes=None, cell_class=None) -> ReconOperator:
    """Dense per-stencil operator (reference path; kernels pack these)."""
    if classes is None:
        classes, cell_class = shape_classes(mesh)
    cls = classes[cell_class[stencil.target]]
    means = cls.mean_vector(stencil.r)
    A, vols = _basis_integral_rows(mesh, stencil.target, stencil.members[1:],
                                   stencil.shifts[1:], stencil.r, means)
    try:
        Ahat, cond = _pseudo_inverse(A)
    except StencilError as exc:
        raise StencilError(f"cell {stencil.target} ({stencil.kind}): {exc}") from exc
    if cond > COND_WARN_THRESHOLD:
        warnings.warn(f"stencil on cell {stencil.target}: condition number {cond:.2e}")
    B = cls.smoothness_form(stencil.r)
    k = int(mesh.cell_kind[stencil.target])
    face_psi = np.empty((k, mesh.face_qp.shape[1], len(means)))
    for slot in range(k):
        f = int(mesh.cell_faces[stencil.target, slot])
        sh = (0.0, 0.0)
        if mesh.face_cells[f, 1] == stencil.target and mesh.face_cells[f, 0] != stencil.target:
            sh = mesh.face_shift[f]
        face_psi[slot] = evaluate_basis(mesh, stencil.target, mesh.face_qp[f],
                                        stencil.r, means, shift=sh)
    return ReconOperator(stencil=stencil, A=A, Ahat=Ahat, member_volumes=vols,
                         B=B, means=means, face_psi=face_psi, cond=cond)


def evaluate_basis(mesh: Mesh, cell: int, pts_phys: Array, r: int,
                   means: Array, shift=(0.0, 0.0)) -> Array:
    """psi_l at physical points, in cell's reference frame: (n_pts, N_u)."""
    exps = monomial_exponents(r)
    xi = (np.atleast_2d(pts_phys) + np.asarray(shift) - mesh.cell_v0[cell]) @ mesh.cell_Jinv[cell].T
    return eval_monomials(exps, xi) - means[None, :]


# ---------------------------------------------------------------------------
# packed operator set for the solver kernels

@dataclass
class OperatorSet:
    """Flattened per-mesh reconstruction operators.

    Central coefficient computation for cell i:
        a_l = sum_s G[s, l] * (ubar[idx_s] - ubar[i])
    with G stored member-major ([s][l] row-major) in cen_G at offset
    cen_goff[i]; member ids in cen_idx[cen_ptr[i]:cen_ptr[i+1]]. G folds the
    member reference volume into Ahat columns. Directional stencils use the
    same layout keyed by flattened (cell, face-slot). Face tables hold psi
    values of each side's basis at the face quadrature points.
    """
    r_c: int
    r_d: int                 # -1 when the scheme has no directional stencils
    nu_c: int
    nu_d: int
    cen_ptr: Array
    cen_idx: Array
    cen_goff: Array
    cen_G: Array
    dir_start: Array         # (nc+1,) slot range per cell
    dir_face: Array          # (n_slots,) owning face id
    dir_ptr: Array
    dir_idx: Array
    dir_goff: Array
    dir_G: Array
    B_c: Array               # (n_class, nu_c, nu_c)
    B_d: Array               # (n_class, nu_d, nu_d)
    cell_class: Array
    psi_L: Array             # (nf, nq, nu_c)
    psi_R: Array             # (nf, nq, nu_c)
    max_cond: float


def _mesh_subtri_arrays(mesh: Mesh):
    """Per-cell sub-triangle affine maps; quads carry two entries."""
    nc = mesh.n_cells
    v0 = np.zeros((nc, 2, 2))
    J = np.zeros((nc, 2, 2, 2))
    det = np.zeros((nc, 2))
    count = np.where(mesh.cell_kind == 4, 2, 1).astype(np.int64)
    for i in range(nc):
        for j, tri in enumerate(cell_subtriangles(mesh, i)):
            v0[i, j] = tri[0]
            Jt = np.stack([tri[1] - tri[0], tri[2] - tri[0]], axis=1)
            J[i, j] = Jt
            det[i, j] = abs(Jt[0, 0] * Jt[1, 1] - Jt[0, 1] * Jt[1, 0])
    return v0, J, det, count


def _pack_group(mesh, stencils, r, classes, cell_class, collect_deficient=False):
    """Vectorized assembly of many same-degree stencils into flat arrays.

    collect_deficient: report rank-deficient stencil positions in the returned
    list instead of raising, so the caller can regrow and repack them.
    """
    nu = n_monomials(r, 2) - 1
    exps = monomial_exponents(r)
    pts_ref, w_ref = triangle_ref_quad(2 * r)
    nq = len(w_ref)
    counts = np.array([s.n_members - 1 for s in stencils], dtype=np.int64)
    ptr = np.zeros(len(stencils) + 1, dtype=np.int64)
    np.cumsum(counts, out=ptr[1:])
    idx = np.concatenate([s.members[1:] for s in stencils])
    goff = np.zeros(len(stencils) + 1, dtype=np.int64)
    np.cumsum(counts * nu, out=goff[1:])
    G = np.empty(int(goff[-1]))
    max_cond = 0.0
    deficient = []

    sub_v0, sub_J, sub_det, sub_count = _mesh_subtri_arrays(mesh)
    means_by_class = np.stack([c.mean_vector(r) for c in classes])
    chunk = max(1, _ASSEMBLY_CHUNK * 24 // max(nq * nu, 24))
    order = np.argsort(counts, kind="stable")
    for start in range(0, len(order), chunk):
        sel = order[start:start + chunk]
        n_max = int(counts[sel].max())
        # flatten (stencil, member) pairs for the whole chunk
        tgt = np.concatenate([np.full(counts[k], stencils[k].target) for k in sel])
        mem = np.concatenate([stencils[k].members[1:] for k in sel])
        shf = np.vstack([stencils[k].shifts[1:] for k in sel])
        loc = np.concatenate([np.full(counts[k], i) for i, k in enumerate(sel)])
        slot = np.concatenate([np.arange(counts[k]) for k in sel])
        det0 = mesh.cell_detJ[tgt]
        Jinv0 = mesh.cell_Jinv[tgt]
        A_pad = np.zeros((len(sel), n_max, nu))
        for j in (0, 1):
            live = np.flatnonzero(sub_count[mem] > j)
            if len(live) == 0:
                continue
            C = np.einsum("pab,pbc->pac", Jinv0[live], sub_J[mem[live], j])
            d = np.einsum("pab,pb->pa",
                          Jinv0[live], sub_v0[mem[live], j] + shf[live] - mesh.cell_v0[tgt[live]])
            pts = np.einsum("pab,qb->pqa", C, pts_ref) + d[:, None, :]
            phi = eval_monomials(exps, pts.reshape(-1, 2)).reshape(len(live), nq, nu)
            sub_int = np.einsum("q,pql->pl", w_ref, phi)
            sub_int *= (sub_det[mem[live], j] / det0[live])[:, None]
            np.add.at(A_pad, (loc[live], slot[live]), sub_int)
        vols_pad = np.zeros((len(sel), n_max))
        vols_pad[loc, slot] = mesh.cell_vol[mem] / det0
        tgt_class = cell_class[[stencils[k].target for k in sel]]
        A_pad -= vols_pad[:, :, None] * means_by_class[tgt_class][:, None, :]

        # batched QR per member-count value within the chunk
        for n in np.unique(counts[sel]):
            where = np.flatnonzero(counts[sel] == n)
            stack = A_pad[where, :n, :]
            Q, R = np.linalg.qr(stack)
            diag = np.abs(np.einsum("gii->gi", R))
            bad = diag.min(axis=1) <= diag.max(axis=1) * 1e-13
            if bad.any():
                for w in where[np.flatnonzero(bad)]:
                    k = int(sel[w])
                    if not collect_deficient:
                        st = stencils[k]
                        raise StencilError(f"cell {st.target} ({st.kind}): "
                                           "rank-deficient stencil system")
                    deficient.append(k)
                where = where[~bad]
                if len(where) == 0:
                    continue
                Q, R = Q[~bad], R[~bad]
            conds = np.linalg.cond(R)
            max_cond = max(max_cond, float(conds.max()))
            Ahat = np.linalg.solve(R, np.transpose(Q, (0, 2, 1)))
            Gk = np.transpose(Ahat * vols_pad[where, None, :n], (0, 2, 1))
            flat = Gk.reshape(len(where), -1)
            for gi, w in enumerate(where):
                k = sel[w]
                G[goff[k]:goff[k + 1]] = flat[gi]
    if max_cond > COND_WARN_THRESHOLD:
        warnings.warn(f"stencil operators: worst condition number {max_cond:.2e}")
    return ptr, idx, goff[:-1].copy(), G, max_cond, deficient


def _face_psi_tables(mesh: Mesh, r: int, classes, cell_class):
    nf, nq = mesh.n_faces, mesh.face_qp.shape[1]
    nu = n_monomials(r, 2) - 1
    exps = monomial_exponents(r)
    mean_by_class = np.stack([c.mean_vector(r) for c in classes])
    psi = np.empty((2, nf, nq, nu))
    for side in (0, 1):
        cells = mesh.face_cells[:, side].copy()
        interior = cells >= 0
        cc = np.where(interior, cells, 0)
        pts = mesh.face_qp.copy()
        if side == 1:
            pts += mesh.face_shift[:, None, :]
        local = pts - mesh.cell_v0[cc][:, None, :]
        xi = np.einsum("fab,fqb->fqa", mesh.cell_Jinv[cc], local)
        phi = eval_monomials(exps, xi.reshape(-1, 2)).reshape(nf, nq, nu)
        psi[side] = phi - mean_by_class[cell_class[cc]][:, None, :]
        psi[side][~interior] = 0.0
    return psi[0], psi[1]


def build_operator_set(mesh: Mesh, r_c: int, r_d: int = -1) -> OperatorSet:
    """Assemble all stencil operators a scheme needs on this mesh.

    r_c: central (large-stencil) degree. r_d: directional degree, or -1 for
    schemes without directional candidates (linear).
    """
    if mesh.cell_J is None:
        raise StencilError("mesh geometry not computed")
    classes, cell_class = shape_classes(mesh)
    nc = mesh.n_cells
    nu_c = n_monomials(r_c, 2) - 1

    central = [build_central_stencil(mesh, i, r_c) for i in range(nc)]
    cen_ptr, cen_idx, cen_goff, cen_G, cond_c, _ = _pack_group(
        mesh, central, r_c, classes, cell_class)

    if r_d >= 1:
        nu_d = n_monomials(r_d, 2) - 1
        dir_start = np.zeros(nc + 1, dtype=np.int64)
        np.cumsum(mesh.cell_kind.astype(np.int64), out=dir_start[1:])
        directional = []
        dir_face = np.empty(int(dir_start[-1]), dtype=np.int64)
        for i in range(nc):
            sts = build_directional_stencils(mesh, i, r_d)
            for j, st in enumerate(sts):
                dir_face[dir_start[i] + j] = st.face
            directional.extend(sts)
        dir_ptr, dir_idx, dir_goff, dir_G, cond_d, bad = _pack_group(
            mesh, directional, r_d, classes, cell_class,
            collect_deficient=True)
        if bad:
            # a sector stencil can fill its quota without ever starving yet
            # still be degenerate (e.g. one grid column of a Cartesian mesh
            # seen through a wall-normal sector); regrow those unrestricted
            for k in bad:
                st = directional[k]
                directional[k] = _grow_directional(mesh, st.target, st.face,
                                                   r_d, None)
            dir_ptr, dir_idx, dir_goff, dir_G, cond_d, _ = _pack_group(
                mesh, directional, r_d, classes, cell_class)
        B_d = np.stack([c.smoothness_form(r_d) for c in classes])
    else:
        nu_d = 0
        dir_start = np.zeros(nc + 1, dtype=np.int64)
        dir_face = np.empty(0, dtype=np.int64)
        dir_ptr = np.zeros(1, dtype=np.int64)
        dir_idx = np.empty(0, dtype=np.int64)
        dir_goff = np.empty(0, dtype=np.int64)
        dir_G = np.empty(0)
        cond_d = 0.0
        B_d = np.zeros((len(classes), 0, 0))

    B_c = np.stack([c.smoothness_form(r_c) for c in classes])
    psi_L, psi_R = _face_psi_tables(mesh, r_c, classes, cell_class)
    return OperatorSet(
        r_c=r_c, r_d=r_d, nu_c=nu_c, nu_d=nu_d,
        cen_ptr=cen_ptr, cen_idx=cen_idx, cen_goff=cen_goff, cen_G=cen_G,
        dir_start=dir_start, dir_face=dir_face, dir_ptr=dir_ptr,
        dir_idx=dir_idx, dir_goff=dir_goff, dir_G=dir_G,
        B_c=B_c, B_d=B_d, cell_class=cell_class.astype(np.int64),
        psi_L=psi_L, psi_R=psi_R, max_cond=max(cond_c, cond_d))

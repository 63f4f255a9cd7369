"""Unstructured 2D mesh container, generators, I/O and geometry.

Cells are triangles or quads. Quads are decomposed into two triangles for
the reference transform; the first triangle's vertices define the affine
map, so for triangles the reference cell is always the unit triangle
(0,0),(1,0),(0,1).

Face normals point from the left cell to the right cell, with left = lower
cell id for interior faces; boundary faces point outward. Periodic pairing
merges matched boundary faces into interior faces carrying a shift vector:
a point x on the face corresponds to x + shift in the right cell's frame.
"""
from __future__ import annotations

import hashlib
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

Array = np.ndarray


class MeshError(Exception):
    """Invalid mesh input or degenerate geometry."""


@dataclass
class Mesh:
    verts: Array                      # (nv, 2)
    cell_verts: Array                 # (nc, 4) int64, -1 padded for triangles
    cell_kind: Array                  # (nc,) int8: 3 or 4 = vertex/face count
    # connectivity (built by _build_connectivity)
    cell_faces: Array = None          # (nc, 4) int64, -1 padded
    face_verts: Array = None          # (nf, 2) int64
    face_cells: Array = None          # (nf, 2) int64, right = -1 on boundary
    face_normal: Array = None         # (nf, 2)
    face_area: Array = None           # (nf,)
    face_shift: Array = None          # (nf, 2) periodic frame shift (left->right)
    boundary_patches: dict = field(default_factory=dict)   # name -> face id array
    # geometry (built by compute_geometry)
    cell_vol: Array = None            # (nc,)
    cell_cen: Array = None            # (nc, 2)
    cell_J: Array = None              # (nc, 2, 2) reference -> physical
    cell_Jinv: Array = None           # (nc, 2, 2)
    cell_v0: Array = None             # (nc, 2) transform offset
    cell_detJ: Array = None           # (nc,) |det J|
    cell_incircle: Array = None       # (nc,) 2|V|/P
    face_qp: Array = None             # (nf, nq, 2) physical quadrature points
    face_qw: Array = None             # (nq,) normalized weights, sum = 1
    quad_order: int = 0

    @property
    def n_verts(self) -> int:
        return self.verts.shape[0]

    @property
    def n_cells(self) -> int:
        return self.cell_verts.shape[0]

    @property
    def n_faces(self) -> int:
        return self.face_verts.shape[0]

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(self.verts.tobytes())
        h.update(self.cell_verts.tobytes())
        h.update(self.face_cells.tobytes())
        h.update(self.face_shift.tobytes())
        return h.hexdigest()[:16]

    def cell_vertex_coords(self, i: int) -> Array:
        k = int(self.cell_kind[i])
        return self.verts[self.cell_verts[i, :k]]

    def neighbors(self, i: int) -> list:
        """Face-adjacent cell ids (periodic wraps included)."""
        out = []
        for f in self.cell_faces[i]:
            if f < 0:
                continue
            l, r = self.face_cells[f]
            if l == i and r >= 0:
                out.append(int(r))
            elif r == i:
                out.append(int(l))
        return out


def _polygon_area_centroid(pts: Array) -> tuple:
    x = pts[:, 0]
    y = pts[:, 1]
    xs = np.roll(x, -1)
    ys = np.roll(y, -1)
    cross = x * ys - xs * y
    a = 0.5 * cross.sum()
    if a == 0.0:
        return 0.0, pts.mean(axis=0)
    cx = ((x + xs) * cross).sum() / (6.0 * a)
    cy = ((y + ys) * cross).sum() / (6.0 * a)
    return a, np.array([cx, cy])


def _build_cells(verts, cell_verts_list, kinds, patch_edges=None, fix_orientation=False):
    """Assemble a Mesh from vertex coordinates and per-cell vertex lists."""
    nc = len(cell_verts_list)
    cell_verts = np.full((nc, 4), -1, dtype=np.int64)
    cell_kind = np.asarray(kinds, dtype=np.int8)
    for i, vs in enumerate(cell_verts_list):
        pts = verts[list(vs)]
        a, _ = _polygon_area_centroid(pts)
        if a < 0:
            if not fix_orientation:
                raise MeshError(f"cell {i}: negative area {a}")
            warnings.warn(f"cell {i}: vertex order reversed to fix orientation")
            vs = list(vs)[::-1]
        elif a == 0:
            raise MeshError(f"cell {i}: degenerate (zero area)")
        cell_verts[i, : len(vs)] = vs
    mesh = Mesh(verts=np.asarray(verts, dtype=np.float64),
                cell_verts=cell_verts, cell_kind=cell_kind)
    _build_connectivity(mesh, patch_edges or {})
    return mesh


def _build_connectivity(mesh: Mesh, patch_edges: dict) -> None:
    """Derive faces, adjacency, normals and boundary patches."""
    nc = mesh.n_cells
    edge_map = {}  # sorted vertex pair -> [(cell, local slot), ...]
    for i in range(nc):
        k = int(mesh.cell_kind[i])
        vs = mesh.cell_verts[i, :k]
        for j in range(k):
            key = (min(vs[j], vs[(j + 1) % k]), max(vs[j], vs[(j + 1) % k]))
            edge_map.setdefault(key, []).append((i, j))

    # patch lookup: edge key -> patch name
    patch_of_edge = {}
    for name, edges in patch_edges.items():
        for (a, b) in edges:
            patch_of_edge[(min(a, b), max(a, b))] = name

    face_verts, face_cells, cell_faces = [], [], np.full((nc, 4), -1, dtype=np.int64)
    patches: dict = {}
    # deterministic face order: sorted by (left cell id, local slot)
    entries = []
    for key, owners in edge_map.items():
        if len(owners) > 2:
            raise MeshError(f"edge {key} shared by {len(owners)} cells")
        owners.sort()
        entries.append((owners[0][0], owners[0][1], key, owners))
    entries.sort()
    for fid, (_, _, key, owners) in enumerate(entries):
        (c0, j0) = owners[0]
        k0 = int(mesh.cell_kind[c0])
        v_a = mesh.cell_verts[c0, j0]
        v_b = mesh.cell_verts[c0, (j0 + 1) % k0]
        face_verts.append((v_a, v_b))
        cell_faces[c0, j0] = fid
        if len(owners) == 2:
            (c1, j1) = owners[1]
            face_cells.append((c0, c1))
            cell_faces[c1, j1] = fid
        else:
            face_cells.append((c0, -1))
            name = patch_of_edge.get(key)
            if name is not None:
                patches.setdefault(name, []).append(fid)
            else:
                patches.setdefault("_untagged", []).append(fid)

    mesh.face_verts = np.asarray(face_verts, dtype=np.int64)
    mesh.face_cells = np.asarray(face_cells, dtype=np.int64)
    mesh.cell_faces = cell_faces
    mesh.face_shift = np.zeros((len(face_verts), 2))
    mesh.boundary_patches = {n: np.asarray(sorted(f), dtype=np.int64)
                             for n, f in patches.items()}
    # normals: CCW cell boundary -> outward = edge direction rotated -90deg
    a = mesh.verts[mesh.face_verts[:, 0]]
    b = mesh.verts[mesh.face_verts[:, 1]]
    t = b - a
    length = np.hypot(t[:, 0], t[:, 1])
    if np.any(length <= 0):
        raise MeshError("zero-length face")
    n = np.stack([t[:, 1], -t[:, 0]], axis=1) / length[:, None]
    mesh.face_normal = n
    mesh.face_area = length


# ---------------------------------------------------------------------------
# generators

def generate_uniform_tri_mesh(nx: int, ny: int, domain=((0.0, 0.0), (1.0, 1.0)),
                              pattern: str = "diagonal") -> Mesh:
    """Structured triangulation of a rectangle; 2*nx*ny cells.

    diagonal: every square split along the same (lower-left to upper-right)
    diagonal. union-jack: diagonal direction alternates by square parity.
    """
    if nx < 1 or ny < 1:
        raise MeshError(f"grid counts must be positive, got ({nx}, {ny})")
    if pattern not in ("diagonal", "union-jack"):
        raise MeshError(f"unknown pattern {pattern!r}")
    (x0, y0), (x1, y1) = domain
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    verts = np.stack([X.ravel(), Y.ravel()], axis=1)

    def vid(i, j):
        return i * (ny + 1) + j

    cells, kinds = [], []
    for i in range(nx):
        for j in range(ny):
            v00, v10 = vid(i, j), vid(i + 1, j)
            v11, v01 = vid(i + 1, j + 1), vid(i, j + 1)
            if pattern == "diagonal" or (i + j) % 2 == 0:
                cells.append((v00, v10, v11)); kinds.append(3)
                cells.append((v00, v11, v01)); kinds.append(3)
            else:
                cells.append((v00, v10, v01)); kinds.append(3)
                cells.append((v10, v11, v01)); kinds.append(3)
    patch_edges = _rect_patches(nx, ny, vid)
    return _build_cells(verts, cells, kinds, patch_edges)


def generate_uniform_quad_mesh(nx: int, ny: int,
                               domain=((0.0, 0.0), (1.0, 1.0))) -> Mesh:
    """Cartesian quad grid; nx*ny cells."""
    if nx < 1 or ny < 1:
        raise MeshError(f"grid counts must be positive, got ({nx}, {ny})")
    (x0, y0), (x1, y1) = domain
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    verts = np.stack([X.ravel(), Y.ravel()], axis=1)

    def vid(i, j):
        return i * (ny + 1) + j

    cells, kinds = [], []
    for i in range(nx):
        for j in range(ny):
            cells.append((vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)))
            kinds.append(4)
    patch_edges = _rect_patches(nx, ny, vid)
    return _build_cells(verts, cells, kinds, patch_edges)


def _rect_patches(nx, ny, vid):
    return {
        "bottom": [(vid(i, 0), vid(i + 1, 0)) for i in range(nx)],
        "top": [(vid(i, ny), vid(i + 1, ny)) for i in range(nx)],
        "left": [(vid(0, j), vid(0, j + 1)) for j in range(ny)],
        "right": [(vid(nx, j), vid(nx, j + 1)) for j in range(ny)],
    }


def generate_disk_mesh(n_rings: int, radius: float = 1.0,
                       center=(0.0, 0.0)) -> Mesh:
    """Concentric-ring triangulation of a disk; 6*n_rings^2 cells.

    Ring k holds 6k vertices at radius k*radius/n_rings; the rim polygon has
    6*n_rings segments, so the area deficit vs the true circle is
    O((pi/(3 n))^2), well inside the 2% budget at n ~ 50.
    """
    if n_rings < 1:
        raise MeshError("n_rings must be positive")
    cx, cy = center
    verts = [(cx, cy)]
    ring_start = [0]
    for k in range(1, n_rings + 1):
        m = 6 * k
        r = radius * k / n_rings
        ring_start.append(len(verts))
        for j in range(m):
            th = 2.0 * math.pi * j / m
            verts.append((cx + r * math.cos(th), cy + r * math.sin(th)))
    verts = np.asarray(verts)

    cells, kinds = [], []

    def add_ccw(a, b, c):
        (ax, ay), (bx, by), (cx2, cy2) = verts[a], verts[b], verts[c]
        if (bx - ax) * (cy2 - ay) - (by - ay) * (cx2 - ax) < 0:
            a, b, c = a, c, b
        cells.append((a, b, c))
        kinds.append(3)

    # innermost fan
    s1 = ring_start[1]
    for j in range(6):
        add_ccw(0, s1 + j, s1 + (j + 1) % 6)
    # ring bands: angular two-pointer merge between ring k-1 and ring k
    for k in range(2, n_rings + 1):
        mi, mo = 6 * (k - 1), 6 * k
        si, so = ring_start[k - 1], ring_start[k]
        ii = io = 0  # steps taken along each ring
        while ii < mi or io < mo:
            # next angle on each ring if we advance it
            th_i = (ii + 1) / mi if ii < mi else np.inf
            th_o = (io + 1) / mo if io < mo else np.inf
            vi = si + ii % mi
            vo = so + io % mo
            if th_o <= th_i:
                add_ccw(vi, vo, so + (io + 1) % mo)
                io += 1
            else:
                add_ccw(vi, vo, si + (ii + 1) % mi)
                ii += 1
    rim_edges = []
    so, mo = ring_start[n_rings], 6 * n_rings
    for j in range(mo):
        rim_edges.append((so + j, so + (j + 1) % mo))
    return _build_cells(verts, cells, kinds, {"rim": rim_edges})


# ---------------------------------------------------------------------------
# text format I/O

def load_mesh(path) -> Mesh:
    """Read the whitespace-delimited mesh text format.

    Header `ndim=2 nv=<N> nc=<M>`; then `v <id> <x> <y>` lines, `c <id>
    tri|quad <v0> ...` lines, optional `b <patch> <v0> <v1>` boundary tags.
    Ids are 0-based. Cell orientation is auto-fixed with a warning.
    """
    verts = None
    cells_seen = 0
    cell_rows = {}
    patch_edges: dict = {}
    nv = nc = -1
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            try:
                if parts[0].startswith("ndim="):
                    fields = dict(p.split("=") for p in parts)
                    if fields.get("ndim") != "2":
                        raise MeshError(f"line {lineno}: only ndim=2 supported")
                    nv, nc = int(fields["nv"]), int(fields["nc"])
                    verts = np.full((nv, 2), np.nan)
                elif parts[0] == "v":
                    vid = int(parts[1])
                    if verts is None or not (0 <= vid < nv):
                        raise MeshError(f"line {lineno}: vertex id {vid} out of range")
                    verts[vid] = (float(parts[2]), float(parts[3]))
                elif parts[0] == "c":
                    cid = int(parts[1])
                    kind = parts[2]
                    if kind not in ("tri", "quad"):
                        raise MeshError(f"line {lineno}: unknown cell kind {kind!r}")
                    n = 3 if kind == "tri" else 4
                    vs = [int(p) for p in parts[3:3 + n]]
                    if len(vs) != n:
                        raise MeshError(f"line {lineno}: cell {cid} needs {n} vertices")
                    cell_rows[cid] = vs
                    cells_seen += 1
                elif parts[0] == "b":
                    patch_edges.setdefault(parts[1], []).append(
                        (int(parts[2]), int(parts[3])))
                else:
                    raise MeshError(f"line {lineno}: unrecognized record {parts[0]!r}")
            except (ValueError, IndexError) as exc:
                raise MeshError(f"line {lineno}: parse error: {exc}") from exc
    if verts is None:
        raise MeshError("missing header line")
    if np.isnan(verts).any():
        missing = int(np.flatnonzero(np.isnan(verts[:, 0]))[0])
        raise MeshError(f"vertex {missing} not defined")
    if cells_seen != nc or set(cell_rows) != set(range(nc)):
        raise MeshError(f"expected {nc} cells 0..{nc - 1}, got {sorted(cell_rows)[:5]}...")
    cell_list, kinds = [], []
    used = np.zeros(nv, dtype=bool)
    for cid in range(nc):
        vs = cell_rows[cid]
        for v in vs:
            if not (0 <= v < nv):
                raise MeshError(f"cell {cid} references missing vertex {v}")
            used[v] = True
        cell_list.append(vs)
        kinds.append(len(vs))
    if not used.all():
        raise MeshError(f"dangling vertex {int(np.flatnonzero(~used)[0])}: "
                        "not referenced by any cell")
    return _build_cells(verts, cell_list, kinds, patch_edges, fix_orientation=True)


def save_mesh(mesh: Mesh, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"ndim=2 nv={mesh.n_verts} nc={mesh.n_cells}\n")
        for i, (x, y) in enumerate(mesh.verts):
            fh.write(f"v {i} {float(x)!r} {float(y)!r}\n")
        for i in range(mesh.n_cells):
            k = int(mesh.cell_kind[i])
            kind = "tri" if k == 3 else "quad"
            vs = " ".join(str(v) for v in mesh.cell_verts[i, :k])
            fh.write(f"c {i} {kind} {vs}\n")
        for name, fids in mesh.boundary_patches.items():
            for f in fids:
                a, b = mesh.face_verts[f]
                fh.write(f"b {name} {a} {b}\n")


# ---------------------------------------------------------------------------
# quadrature rules

def gauss_legendre_1d(n: int) -> tuple:
    """Nodes/weights on [0,1], exact for degree 2n-1."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def triangle_ref_quad(degree: int) -> tuple:
    """Rule on the unit triangle exact for total degree `degree`.

    Duffy map from the unit square: (xi, eta) = (u(1-v), uv), Jacobian u.
    A degree-d integrand becomes degree d+1 in u and d in v, so n = ceil((d+2)/2)
    Gauss points per direction suffice.
    """
    n = max(1, (degree + 2 + 1) // 2)
    xu, wu = gauss_legendre_1d(n)
    xv, wv = gauss_legendre_1d(n)
    U, V = np.meshgrid(xu, xv, indexing="ij")
    WU, WV = np.meshgrid(wu, wv, indexing="ij")
    xi = (U * (1.0 - V)).ravel()
    eta = (U * V).ravel()
    w = (WU * WV * U).ravel()
    return np.stack([xi, eta], axis=1), w


def triangle_monomial_integral(a: int, b: int) -> float:
    """Closed form: integral of xi^a eta^b over the unit triangle."""
    return math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)


def cell_subtriangles(mesh: Mesh, i: int) -> list:
    """Vertex coordinate triples covering cell i (1 for tri, 2 for quad)."""
    pts = mesh.cell_vertex_coords(i)
    if mesh.cell_kind[i] == 3:
        return [pts]
    return [pts[[0, 1, 2]], pts[[0, 2, 3]]]


def physical_cell_quad(mesh: Mesh, i: int, degree: int) -> tuple:
    """Quadrature points/weights over the physical cell, exact to `degree`."""
    ref_p, ref_w = triangle_ref_quad(degree)
    pts, wts = [], []
    for tri in cell_subtriangles(mesh, i):
        J = np.stack([tri[1] - tri[0], tri[2] - tri[0]], axis=1)
        det = abs(J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0])
        pts.append(tri[0] + ref_p @ J.T)
        wts.append(ref_w * det)
    return np.vstack(pts), np.concatenate(wts)


# ---------------------------------------------------------------------------
# geometry

def compute_geometry(mesh: Mesh, quad_order: int) -> Mesh:
    """Attach transforms, volumes and face quadrature (in place).

    Each face gets ceil((quad_order+1)/2) Gauss-Legendre points; cell volume
    rules elsewhere are requested exact to degree 2*quad_order.
    """
    nc, nf = mesh.n_cells, mesh.n_faces
    vol = np.empty(nc)
    cen = np.empty((nc, 2))
    J = np.empty((nc, 2, 2))
    for i in range(nc):
        pts = mesh.cell_vertex_coords(i)
        a, c = _polygon_area_centroid(pts)
        if a <= 0:
            raise MeshError(f"cell {i}: non-positive area {a}")
        vol[i] = a
        cen[i] = c
        Ji = np.stack([pts[1] - pts[0], pts[2] - pts[0]], axis=1)
        if abs(np.linalg.det(Ji)) < 1e-300:
            raise MeshError(f"cell {i}: collinear vertices")
        J[i] = Ji
    detJ = np.abs(J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0])
    Jinv = np.empty_like(J)
    Jinv[:, 0, 0] = J[:, 1, 1]
    Jinv[:, 0, 1] = -J[:, 0, 1]
    Jinv[:, 1, 0] = -J[:, 1, 0]
    Jinv[:, 1, 1] = J[:, 0, 0]
    signed = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
    Jinv /= signed[:, None, None]

    v0 = np.empty((nc, 2))
    perim = np.zeros(nc)
    for i in range(nc):
        pts = mesh.cell_vertex_coords(i)
        v0[i] = pts[0]
        perim[i] = np.hypot(*(np.roll(pts, -1, axis=0) - pts).T).sum()

    mesh.cell_vol = vol
    mesh.cell_cen = cen
    mesh.cell_J = J
    mesh.cell_Jinv = Jinv
    mesh.cell_v0 = v0
    mesh.cell_detJ = detJ
    mesh.cell_incircle = 2.0 * vol / perim

    nq = max(1, (quad_order + 1 + 1) // 2)
    gx, gw = gauss_legendre_1d(nq)
    a = mesh.verts[mesh.face_verts[:, 0]]
    b = mesh.verts[mesh.face_verts[:, 1]]
    mesh.face_qp = a[:, None, :] + gx[None, :, None] * (b - a)[:, None, :]
    mesh.face_qw = gw.copy()   # sums to 1: flux sums multiply by |A| separately
    mesh.quad_order = quad_order
    return mesh


def to_reference(mesh: Mesh, i: int, pts: Array) -> Array:
    """Map physical points into cell i's reference coordinates."""
    return (np.atleast_2d(pts) - mesh.cell_v0[i]) @ mesh.cell_Jinv[i].T


def from_reference(mesh: Mesh, i: int, xi: Array) -> Array:
    return mesh.cell_v0[i] + np.atleast_2d(xi) @ mesh.cell_J[i].T


# ---------------------------------------------------------------------------
# boundary patch surgery

def split_patch(mesh: Mesh, name: str, predicate, name_true: str,
                name_false: str) -> None:
    """Split a boundary patch in two by a midpoint predicate (in place)."""
    fids = mesh.boundary_patches.pop(name)
    mids = 0.5 * (mesh.verts[mesh.face_verts[fids, 0]]
                  + mesh.verts[mesh.face_verts[fids, 1]])
    mask = np.asarray([bool(predicate(x, y)) for x, y in mids])
    mesh.boundary_patches[name_true] = fids[mask]
    mesh.boundary_patches[name_false] = fids[~mask]


def apply_periodic(mesh: Mesh, patch_a: str, patch_b: str, shift) -> None:
    """Merge two congruent boundary patches into periodic interior faces.

    `shift` maps patch-a face midpoints onto patch-b midpoints. The a-side
    faces become interior faces whose right cell is the b-side interior
    cell; the b-side faces are dropped. face_shift records the left->right
    frame offset (a point x on the kept face is x + shift in the right
    cell's frame).
    """
    shift = np.asarray(shift, dtype=np.float64)
    fa = mesh.boundary_patches.pop(patch_a)
    fb = mesh.boundary_patches.pop(patch_b)
    if len(fa) != len(fb):
        raise MeshError(f"periodic patches {patch_a}/{patch_b} differ in size")
    mid = lambda fids: 0.5 * (mesh.verts[mesh.face_verts[fids, 0]]
                              + mesh.verts[mesh.face_verts[fids, 1]])
    ma, mb = mid(fa), mid(fb)
    scale = max(1.0, np.abs(mesh.verts).max())
    order_a = np.lexsort((ma[:, 0], ma[:, 1]))
    order_b = np.lexsort(((mb - shift)[:, 0], (mb - shift)[:, 1]))
    fa, fb = fa[order_a], fb[order_b]
    if not np.allclose(ma[order_a] + shift, mb[order_b], atol=1e-9 * scale):
        raise MeshError(f"periodic patches {patch_a}/{patch_b} not congruent under shift {shift}")

    keep = np.ones(mesh.n_faces, dtype=bool)
    for f_a, f_b in zip(fa, fb):
        c_b = mesh.face_cells[f_b, 0]
        mesh.face_cells[f_a, 1] = c_b
        mesh.face_shift[f_a] = shift
        # rewire the b cell's face slot to the kept face
        slot = np.flatnonzero(mesh.cell_faces[c_b] == f_b)[0]
        mesh.cell_faces[c_b, slot] = f_a
        keep[f_b] = False

    remap = np.cumsum(keep) - 1
    mesh.face_verts = mesh.face_verts[keep]
    mesh.face_cells = mesh.face_cells[keep]
    mesh.face_normal = mesh.face_normal[keep]
    mesh.face_area = mesh.face_area[keep]
    mesh.face_shift = mesh.face_shift[keep]
    if mesh.face_qp is not None:
        mesh.face_qp = mesh.face_qp[keep]
    live = mesh.cell_faces >= 0
    mesh.cell_faces[live] = remap[mesh.cell_faces[live]]
    mesh.boundary_patches = {n: remap[np.asarray(f)]
                             for n, f in mesh.boundary_patches.items()}

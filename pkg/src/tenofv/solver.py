"""Semi-discrete residual assembly, boundary conditions, and time stepping.

The solver advances cell averages U (n_cells, n_comp) with SSP-RK3 under a
CFL constraint. Each right-hand-side evaluation runs three phases:

  A. reconstruct: candidate coefficients, smoothness, nonlinear combination
     (compiled kernels over the packed operator set);
  B. trace: one-sided states at face quadrature points, then ghost states
     for boundary faces from the tagged boundary conditions;
  C. flux: one interface flux per face, integrated with the face weights
     and scattered to both cells with opposite signs.

Face visitation order is fixed, so residuals are bit-reproducible.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .euler import GAMMA, prim_to_cons
from .mesh import Mesh
from .reconstruct import SchemeConfig
from .stencil import OperatorSet, build_operator_set

Array = np.ndarray

CFL_DEFAULT = 0.4
BC_KINDS = ("reflective-wall", "supersonic-inflow", "transmissive-outflow",
            "time-dependent-dirichlet")


class SolverError(Exception):
    """Numerical abort (positivity or wave-speed failure) with diagnostics."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ConfigurationError(Exception):
    """Inconsistent case setup (untagged boundary, bad BC kind, ...)."""


@dataclass
class BoundaryCondition:
    kind: str
    state: Array | None = None          # supersonic-inflow: fixed cons state
    fn: object | None = None            # dirichlet: (x, y, t) -> cons states

    def __post_init__(self):
        if self.kind not in BC_KINDS:
            raise ConfigurationError(f"unknown boundary kind {self.kind!r}")
        if self.kind == "supersonic-inflow" and self.state is None:
            raise ConfigurationError("supersonic-inflow needs a state")
        if self.kind == "time-dependent-dirichlet" and self.fn is None:
            raise ConfigurationError("time-dependent-dirichlet needs a function")


@dataclass
class FieldState:
    u: Array                  # (n_cells, n_comp) cell averages
    t: float = 0.0
    step: int = 0


@dataclass
class RunResult:
    state: FieldState
    n_iter: int
    aborted: bool
    abort_info: str | None
    t_total: float
    t_recon: float
    teno_step1_min_fraction: float
    snapshots: list = field(default_factory=list)

    @property
    def t_norm(self) -> float:
        """Reconstruction seconds per iteration per cell (cost metric)."""
        n_e = self.state.u.shape[0]
        if self.n_iter == 0:
            return 0.0
        return self.t_recon / (self.n_iter * n_e)


class Discretization:
    """Mesh + operators + scheme + physics, with preallocated work arrays."""

    def __init__(self, mesh: Mesh, scheme: SchemeConfig, physics: str,
                 bcs: dict | None = None, velocity=None, gamma: float = GAMMA,
                 op_set: OperatorSet | None = None):
        if physics not in ("euler", "advection"):
            raise ConfigurationError(f"unknown physics {physics!r}")
        if mesh.cell_J is None:
            raise ConfigurationError("mesh geometry not computed")
        self.mesh = mesh
        self.scheme = scheme
        self.physics = physics
        self.gamma = gamma
        self.n_comp = 4 if physics == "euler" else 1
        bcs = dict(bcs or {})

        untagged = [p for p in mesh.boundary_patches if p.startswith("_untagged")]
        if untagged and mesh.boundary_patches.get(untagged[0], []):
            f = mesh.boundary_patches[untagged[0]][0]
            raise ConfigurationError(
                f"boundary face {f} has no patch tag; tag it or make it periodic")
        missing = [p for p in mesh.boundary_patches if p not in bcs]
        if missing:
            raise ConfigurationError(f"no boundary condition for patches {missing}")
        extra = [p for p in bcs if p not in mesh.boundary_patches]
        if extra:
            raise ConfigurationError(f"boundary conditions for unknown patches {extra}")
        self.bcs = bcs

        if op_set is None:
            op_set = build_operator_set(mesh, scheme.r, scheme.directional_degree)
        elif op_set.r_c != scheme.r or op_set.r_d != scheme.directional_degree:
            raise ConfigurationError("operator set degrees do not match scheme")
        self.ops = op_set

        nf, nq = mesh.face_qp.shape[:2]
        nc = mesh.n_cells
        nu_c, nu_d = self.ops.nu_c, max(self.ops.nu_d, 1)
        n_slots = max(int(self.ops.dir_start[-1]), 1)
        self._a_c = np.zeros((nc, nu_c, self.n_comp))
        self._a_d = np.zeros((n_slots, nu_d, self.n_comp))
        self._beta_c = np.zeros((nc, self.n_comp))
        self._beta_d = np.zeros((n_slots, self.n_comp))
        self._coeffs = np.zeros((nc, nu_c, self.n_comp))
        self._U_L = np.zeros((nf, nq, self.n_comp))
        self._U_R = np.zeros((nf, nq, self.n_comp))
        self._R = np.zeros((nc, self.n_comp))
        self._lam = np.zeros(nc)
        self._flags = np.zeros(nc, dtype=np.int64)
        self._info = np.zeros(3, dtype=np.int64)
        self._owner = np.repeat(np.arange(nc, dtype=np.int64),
                                np.diff(self.ops.dir_start))
        self._bfaces = {p: np.asarray(fs, dtype=np.int64)
                        for p, fs in mesh.boundary_patches.items()}

        if physics == "advection":
            if velocity is None:
                raise ConfigurationError("advection needs a velocity field")
            qp = mesh.face_qp.reshape(-1, 2)
            vx, vy = velocity(qp[:, 0], qp[:, 1])
            vel = np.stack(np.broadcast_arrays(vx, vy), axis=-1).reshape(nf, nq, 2)
            self._vn = np.einsum("fqd,fd->fq", vel, mesh.face_normal)
            cx, cy = velocity(mesh.cell_cen[:, 0], mesh.cell_cen[:, 1])
            self._lam_adv = np.hypot(*np.broadcast_arrays(cx, cy))
            for p, bc in bcs.items():
                if bc.kind in ("reflective-wall", "supersonic-inflow"):
                    raise ConfigurationError(
                        f"patch {p!r}: {bc.kind} applies to the Euler system only")
        else:
            self._vn = None
            self._lam_adv = None

        self.t_recon = 0.0
        self.teno_step1_min_fraction = 1.0
        self._kind_code = {"linear": K.KIND_LINEAR, "weno": K.KIND_WENO,
                           "cweno": K.KIND_CWENO, "teno": K.KIND_TENO}[scheme.kind]

    # -- phase A -----------------------------------------------------------

    def _reconstruct(self, u: Array) -> Array:
        ops, cfg = self.ops, self.scheme
        t0 = time.perf_counter()
        K.candidate_coeffs(u, ops.cen_ptr, ops.cen_idx, ops.cen_goff,
                           ops.cen_G, ops.nu_c, self._a_c)
        if cfg.kind == "linear":
            K.combine_linear(self._a_c, self._coeffs)
        else:
            K.directional_coeffs(u, ops.dir_ptr, ops.dir_idx, ops.dir_goff,
                                 ops.dir_G, ops.nu_d, self._owner, self._a_d)
            K.smoothness_betas(self._a_c, ops.B_c, ops.cell_class, self._beta_c)
            K.smoothness_betas(self._a_d, ops.B_d,
                               ops.cell_class[self._owner], self._beta_d)
            if cfg.kind == "weno":
                K.combine_weno(self._a_c, self._beta_c, self._a_d, self._beta_d,
                               ops.dir_start, cfg.weno_d_central,
                               cfg.weno_d_directional, cfg.eps_weno,
                               cfg.weno_power, self._coeffs)
            elif cfg.kind == "cweno":
                K.combine_cweno(self._a_c, self._beta_c, self._a_d, self._beta_d,
                                ops.dir_start, cfg.cweno_dK_prime, cfg.eps_weno,
                                cfg.weno_power, self._coeffs)
            else:
                count = K.combine_teno(self._a_c, self._beta_c, self._a_d,
                                       self._beta_d, ops.dir_start, cfg.eps_teno,
                                       cfg.teno_power, cfg.cutoff,
                                       cfg.teno_selection == "per-variable",
                                       self._coeffs, self._flags)
                frac = count / self.mesh.n_cells
                self.teno_step1_min_fraction = min(
                    self.teno_step1_min_fraction, frac)
        self.t_recon += time.perf_counter() - t0
        return self._coeffs

    # -- phase B -----------------------------------------------------------

    def _ghost_states(self, t: float) -> None:
        mesh = self.mesh
        for patch, faces in self._bfaces.items():
            if len(faces) == 0:
                continue
            bc = self.bcs[patch]
            U_in = self._U_L[faces]                        # (nb, nq, ncomp)
            if bc.kind == "transmissive-outflow":
                self._U_R[faces] = U_in
            elif bc.kind == "supersonic-inflow":
                self._U_R[faces] = bc.state[None, None, :]
            elif bc.kind == "reflective-wall":
                n = mesh.face_normal[faces][:, None, :]    # (nb, 1, 2)
                mn = U_in[..., 1] * n[..., 0] + U_in[..., 2] * n[..., 1]
                ghost = U_in.copy()
                ghost[..., 1] -= 2.0 * mn * n[..., 0]
                ghost[..., 2] -= 2.0 * mn * n[..., 1]
                self._U_R[faces] = ghost
            else:
                qp = mesh.face_qp[faces]                   # (nb, nq, 2)
                vals = bc.fn(qp[..., 0], qp[..., 1], t)
                self._U_R[faces] = np.asarray(vals, dtype=np.float64).reshape(
                    U_in.shape)

    def ghost_state(self, face: int, interior: Array, bc: BoundaryCondition,
                    t: float) -> Array:
        """Single-point reference ghost evaluation (spec-level op)."""
        interior = np.asarray(interior, dtype=np.float64)
        if bc.kind == "transmissive-outflow":
            return interior.copy()
        if bc.kind == "supersonic-inflow":
            return bc.state.copy()
        if bc.kind == "reflective-wall":
            n = self.mesh.face_normal[face]
            mn = interior[1] * n[0] + interior[2] * n[1]
            out = interior.copy()
            out[1] -= 2.0 * mn * n[0]
            out[2] -= 2.0 * mn * n[1]
            return out
        mid = self.mesh.verts[self.mesh.face_verts[face]].mean(axis=0)
        return np.asarray(bc.fn(mid[0], mid[1], t), dtype=np.float64).reshape(-1)

    # -- full right-hand side ----------------------------------------------

    def compute_rhs(self, state: FieldState, t: float | None = None) -> Array:
        mesh = self.mesh
        t = state.t if t is None else t
        self._reconstruct(state.u)
        K.face_traces(state.u, self._coeffs, self.ops.psi_L, self.ops.psi_R,
                      mesh.face_cells, self._U_L, self._U_R)
        self._ghost_states(t)
        if self.physics == "euler":
            status = K.check_positivity(self._U_L, self._U_R, self.gamma,
                                        self._info)
            if status != K.OK:
                f, side, q = (int(v) for v in self._info)
                cell = int(mesh.face_cells[f, 0 if side == 0 else 1])
                what = "density" if status == K.BAD_DENSITY else "pressure"
                raise SolverError(
                    f"non-positive {what} in reconstructed state at face {f} "
                    f"(cell {cell}, quad point {q}, t={t:.6g})",
                    {"kind": "positivity", "cell": cell, "face": f, "t": t})
            status = K.euler_face_fluxes(
                self._U_L, self._U_R, mesh.face_normal, mesh.face_qw,
                mesh.face_area, mesh.face_cells, mesh.cell_vol, self.gamma,
                self._R, self._info)
            if status != K.OK:
                f, q = int(self._info[0]), int(self._info[1])
                raise SolverError(
                    f"flux evaluation failed at face {f} (quad point {q}, "
                    f"t={t:.6g})", {"kind": "wave-speed", "face": f, "t": t})
        else:
            K.advection_face_fluxes(self._U_L, self._U_R, self._vn,
                                    mesh.face_qw, mesh.face_area,
                                    mesh.face_cells, mesh.cell_vol, self._R)
        return self._R

    # -- time stepping -------------------------------------------------------

    def compute_dt(self, state: FieldState, cfl: float = CFL_DEFAULT) -> float:
        if self.physics == "euler":
            status = K.euler_cell_wavespeed(state.u, self.gamma, self._lam)
            if status != K.OK:
                i = int(np.argmin(self._lam))
                raise SolverError(
                    f"unphysical cell average at cell {i}, t={state.t:.6g}",
                    {"kind": "positivity", "cell": i, "t": state.t})
            lam = self._lam
        else:
            lam = self._lam_adv
        lmax = lam.max()
        if lmax <= 0.0:
            raise SolverError("zero wave speed everywhere; dt undefined")
        safe = np.where(lam > 0.0, lam, lmax)
        return cfl * float((self.mesh.cell_incircle / safe).min())

    def _check_stage_positivity(self, u: Array, t: float, stage: int) -> None:
        if self.physics != "euler":
            return
        rho = u[:, 0]
        ke = 0.5 * (u[:, 1] ** 2 + u[:, 2] ** 2)
        if rho.min() <= 0.0:
            i = int(np.argmin(rho))
            raise SolverError(
                f"non-positive density in stage {stage} average (cell {i}, "
                f"t={t:.6g})", {"kind": "positivity", "cell": i, "t": t,
                                "stage": stage})
        p = (self.gamma - 1.0) * (u[:, 3] - ke / rho)
        if p.min() <= 0.0:
            i = int(np.argmin(p))
            raise SolverError(
                f"non-positive pressure in stage {stage} average (cell {i}, "
                f"t={t:.6g})", {"kind": "positivity", "cell": i, "t": t,
                                "stage": stage})

    def ssp_rk3_step(self, state: FieldState, dt: float) -> FieldState:
        """U1 = U + dt R(U); U2 = 3/4 U + 1/4 U1 + 1/4 dt R(U1);
        U+ = 1/3 U + 2/3 U2 + 2/3 dt R(U2). Stage times t, t+dt, t+dt/2.

        Stages 2 and 3 use the increment arrangement U + c ((U* - U) + dt R),
        algebraically identical to the convex form above; it keeps a state
        with zero residual bit-identical, which the rounded convex weights
        (1/3 + 2/3 < 1 in floating point) do not.
        """
        u0, t = state.u, state.t
        r0 = self.compute_rhs(state, t)
        u1 = u0 + dt * r0
        self._check_stage_positivity(u1, t + dt, 1)
        r1 = self.compute_rhs(FieldState(u1, t), t + dt)
        u2 = u0 + 0.25 * ((u1 - u0) + dt * r1)
        self._check_stage_positivity(u2, t + 0.5 * dt, 2)
        r2 = self.compute_rhs(FieldState(u2, t), t + 0.5 * dt)
        u3 = u0 + (2.0 / 3.0) * ((u2 - u0) + dt * r2)
        self._check_stage_positivity(u3, t + dt, 3)
        return FieldState(u3, t + dt, state.step + 1)


def run(disc: Discretization, state: FieldState, t_end: float,
        cfl: float = CFL_DEFAULT, max_steps: int = 2_000_000,
        log=None, log_every: int = 50, snapshot_every: int = 0,
        raise_on_abort: bool = True) -> RunResult:
    """Advance to t_end with final-step clipping.

    log: optional callable receiving one progress line per log_every steps.
    snapshot_every: store (t, copy of u) every that many steps (0 = off).
    """
    t_wall = time.perf_counter()
    disc.t_recon = 0.0
    disc.teno_step1_min_fraction = 1.0
    snapshots = []
    aborted = False
    abort_info = None
    try:
        while state.t < t_end - 1e-14 and state.step < max_steps:
            dt = disc.compute_dt(state, cfl)
            if state.t + dt > t_end:
                dt = t_end - state.t
            state = disc.ssp_rk3_step(state, dt)
            if log is not None and state.step % log_every == 0:
                log(_progress_line(disc, state, dt))
            if snapshot_every and state.step % snapshot_every == 0:
                snapshots.append((state.t, state.u.copy()))
        if state.step >= max_steps and state.t < t_end - 1e-14:
            raise SolverError(
                f"step limit {max_steps} reached at t={state.t:.6g} "
                f"before t_end={t_end:.6g}")
    except SolverError as exc:
        if raise_on_abort:
            raise
        aborted = True
        abort_info = str(exc)
    return RunResult(state=state, n_iter=state.step, aborted=aborted,
                     abort_info=abort_info,
                     t_total=time.perf_counter() - t_wall,
                     t_recon=disc.t_recon,
                     teno_step1_min_fraction=disc.teno_step1_min_fraction,
                     snapshots=snapshots)


def _progress_line(disc: Discretization, state: FieldState, dt: float) -> str:
    if disc.physics == "euler":
        rho = state.u[:, 0]
        p = (disc.gamma - 1.0) * (
            state.u[:, 3] - 0.5 * (state.u[:, 1] ** 2 + state.u[:, 2] ** 2) / rho)
        return (f"step {state.step} t {state.t:.6e} dt {dt:.3e} "
                f"min_rho {rho.min():.6e} min_p {p.min():.6e}")
    return (f"step {state.step} t {state.t:.6e} dt {dt:.3e} "
            f"min_u {state.u.min():.6e} max_u {state.u.max():.6e}")


def make_inflow(prim_state, gamma: float = GAMMA) -> BoundaryCondition:
    """Supersonic inflow from a primitive (rho, u, v, p) tuple."""
    return BoundaryCondition("supersonic-inflow",
                             state=prim_to_cons(np.asarray(prim_state, float), gamma))

"""Nonlinear reconstruction schemes: linear, WENO, CWENO, TENO.

This module is the plain-numpy reference path. It reconstructs one cell at
a time from dense operators, which keeps the algebra auditable; the solver
runs a compiled mirror of the same arithmetic over packed operator sets.

Polynomials are coefficient vectors over the zero-mean basis of the target
cell, shaped (n_unknown, n_comp). A degree-2 candidate embeds into a
degree-r coefficient vector by zero-padding: the graded basis orders all
degree <= 2 terms first.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .stencil import ReconOperator

Array = np.ndarray

VALID_KINDS = ("linear", "weno", "cweno", "teno")


@dataclass
class SchemeConfig:
    """Scheme selection plus the fixed nonlinear-weight constants.

    The constants are never tuned per case. order = r + 1.
    """
    kind: str = "teno"
    r: int = 4
    eps_weno: float = 1e-14
    eps_teno: float = 1e-12
    cutoff: float = 1e-6                   # C_T
    weno_d_central: float = 1e4
    weno_d_directional: float = 1.0
    cweno_dK_prime: float = 1e4
    weno_power: int = 4
    teno_power: int = 6
    reconstructed_variables: str = "conservative"
    teno_selection: str = "joint"          # joint (density-driven) | per-variable

    def __post_init__(self):
        if self.kind not in VALID_KINDS:
            raise ValueError(f"unknown scheme kind {self.kind!r}")
        if not 2 <= self.r <= 5:
            raise ValueError(f"degree r={self.r} outside 2..5 (orders 3..6)")
        if not 0.0 < self.cutoff < 1.0:
            raise ValueError("cutoff must lie in (0, 1)")
        if self.reconstructed_variables not in ("conservative", "primitive"):
            raise ValueError("reconstructed_variables must be conservative or primitive")
        if self.teno_selection not in ("joint", "per-variable"):
            raise ValueError("teno_selection must be joint or per-variable")

    @property
    def order(self) -> int:
        return self.r + 1

    @property
    def directional_degree(self) -> int:
        """WENO blends equal-degree candidates; CWENO/TENO use degree 2."""
        if self.kind == "linear":
            return -1
        return self.r if self.kind == "weno" else 2


@dataclass
class CandidateSet:
    large: Array               # (nu_large, n_comp)
    beta_large: Array          # (n_comp,)
    small: list = field(default_factory=list)        # K x (nu_small, n_comp)
    beta_small: list = field(default_factory=list)   # K x (n_comp,)

    @property
    def n_small(self) -> int:
        return len(self.small)


def candidate_coefficients(op: ReconOperator, averages: Array, target_value: Array) -> Array:
    """a = Ahat b with b_s = |V'_s| (Ubar_s - Ubar_0); averages exclude the target."""
    b = op.member_volumes[:, None] * (averages - target_value[None, :])
    return op.Ahat @ b


def smoothness(op: ReconOperator, coeffs: Array) -> Array:
    """beta = a^T B a per component."""
    return np.einsum("lc,lm,mc->c", coeffs, op.B, coeffs)


def reconstruct_candidates(op_central: ReconOperator, op_directional: list,
                           averages: Array) -> CandidateSet:
    """Candidate polynomials and smoothness for one cell.

    averages: full cell-average array (n_cells, n_comp), indexed through
    each stencil's member list; the target value is row `target`.
    """
    tgt = op_central.stencil.target
    u0 = averages[tgt]
    a_K = candidate_coefficients(op_central, averages[op_central.stencil.members[1:]], u0)
    cands = CandidateSet(large=a_K, beta_large=smoothness(op_central, a_K))
    for op in op_directional:
        a = candidate_coefficients(op, averages[op.stencil.members[1:]], u0)
        cands.small.append(a)
        cands.beta_small.append(smoothness(op, a))
    return cands


def _pad(a_small: Array, nu_large: int) -> Array:
    out = np.zeros((nu_large, a_small.shape[1]))
    out[:a_small.shape[0]] = a_small
    return out


def weno_combine(cands: CandidateSet, cfg: SchemeConfig) -> Array:
    """w_k = alpha_k / sum(alpha), alpha_k = d_k / (beta_k + eps)^p.

    All candidates share the full degree, so blending is coefficient-wise.
    """
    betas = np.stack([cands.beta_large] + cands.beta_small)       # (K+1, nc)
    d = np.full((cands.n_small + 1, 1), cfg.weno_d_directional)
    d[0] = cfg.weno_d_central
    alpha = d / (betas + cfg.eps_weno) ** cfg.weno_power
    w = alpha / alpha.sum(axis=0)
    coeffs = np.stack([cands.large] + [ _pad(a, cands.large.shape[0])
                                        for a in cands.small])    # (K+1, nu, nc)
    return np.einsum("kc,klc->lc", w, coeffs)


def cweno_combine(cands: CandidateSet, cfg: SchemeConfig) -> Array:
    """P = (w_K/d_K)(P_K - sum d_k P_k) + sum w_k P_k.

    d_K = 1 - 1/d'_K and d_k = (1 - d_K)/K, so the d-weights sum to one
    and w = d telescopes to the large-stencil polynomial.
    """
    K = cands.n_small
    d_K = 1.0 - 1.0 / cfg.cweno_dK_prime
    d_k = (1.0 - d_K) / K
    betas = np.stack([cands.beta_large] + cands.beta_small)
    d = np.full((K + 1, 1), d_k)
    d[0] = d_K
    alpha = d / (betas + cfg.eps_weno) ** cfg.weno_power
    w = alpha / alpha.sum(axis=0)
    nu = cands.large.shape[0]
    small = [ _pad(a, nu) for a in cands.small ]
    inner = cands.large - d_k * sum(small)
    out = (w[0] / d_K) * inner
    for k in range(K):
        out = out + w[k + 1] * small[k]
    return out


def teno_selection_mask(beta_large: float, beta_small: Array, cfg: SchemeConfig):
    """Two-step cut-off selection for one scalar.

    Returns (use_large, delta) where delta is the 0/1 mask over the small
    candidates (undefined when use_large).
    """
    betas = np.concatenate([[beta_large], beta_small])
    gamma = 1.0 / (betas + cfg.eps_teno) ** cfg.teno_power
    chi = gamma / gamma.sum()
    if chi[0] >= cfg.cutoff:
        return True, None
    gamma_s = gamma[1:]
    chi_s = gamma_s / gamma_s.sum()
    delta = (chi_s >= cfg.cutoff).astype(np.float64)
    # max chi_s >= 1/K > C_T, so at least one small stencil always survives
    assert delta.sum() > 0.0, "empty TENO selection"
    return False, delta


def teno_combine(cands: CandidateSet, cfg: SchemeConfig):
    """Sharp cut-off selection; returns (coefficients, used_large mask).

    Step (i): renormalized gamma over all K+1 candidates; a smooth large
    stencil returns P_K verbatim. Step (ii): renormalize over the K small
    candidates, drop those below the cut-off, average the survivors.
    """
    n_comp = cands.large.shape[1]
    nu = cands.large.shape[0]
    beta_s = np.stack(cands.beta_small)                 # (K, nc)
    out = np.empty((nu, n_comp))
    used_large = np.zeros(n_comp, dtype=bool)
    if cfg.teno_selection == "joint":
        drivers = [0] * n_comp                          # density drives all
    else:
        drivers = list(range(n_comp))
    decided = {}
    for c in range(n_comp):
        drv = drivers[c]
        if drv not in decided:
            decided[drv] = teno_selection_mask(
                float(cands.beta_large[drv]), beta_s[:, drv], cfg)
        use_large, delta = decided[drv]
        if use_large:
            out[:, c] = cands.large[:, c]
            used_large[c] = True
        else:
            w = delta / delta.sum()
            acc = np.zeros(nu)
            for k in range(cands.n_small):
                if w[k] != 0.0:
                    acc[:cands.small[k].shape[0]] += w[k] * cands.small[k][:, c]
            out[:, c] = acc
    return out, used_large


def combine(cands: CandidateSet, cfg: SchemeConfig) -> Array:
    if cfg.kind == "linear":
        return cands.large
    if cfg.kind == "weno":
        return weno_combine(cands, cfg)
    if cfg.kind == "cweno":
        return cweno_combine(cands, cfg)
    out, _ = teno_combine(cands, cfg)
    return out


def interface_states(mesh, op_set, coeffs: Array, averages: Array, face: int):
    """One-sided states at a face's quadrature points.

    coeffs: (n_cells, nu, n_comp) combined coefficients; averages:
    (n_cells, n_comp). Returns (U_L, U_R), each (nq, n_comp); U_R is None
    for boundary faces (ghost states are the solver's job).
    """
    l, r = mesh.face_cells[face]
    U_L = averages[l][None, :] + np.einsum("ql,lc->qc", op_set.psi_L[face], coeffs[l])
    if r < 0:
        return U_L, None
    U_R = averages[r][None, :] + np.einsum("ql,lc->qc", op_set.psi_R[face], coeffs[r])
    return U_L, U_R

"""Compiled inner loops for the solver.

Everything here mirrors the reference implementations in reconstruct.py and
euler.py operation for operation; the mirror tests in test_solver.py hold
the two paths together. Loops are serial and deterministic: faces are
visited in id order and residuals accumulated in that order, so reruns are
bit-identical. No fastmath: reassociation would break the bitwise
equalities the smooth-flow checks rely on.

Layout contract (set by microbenchmarks on the packed operators): per
stencil the gain matrix G is stored member-major ([s][l] row-major), the
member loop is outer and the coefficient loop inner, and the four Euler
components ride in the innermost axis so one G load feeds four fused
multiply-adds.
"""
from __future__ import annotations

import numpy as np
from numba import njit

# status codes shared with solver.py
OK = 0
BAD_DENSITY = 1
BAD_PRESSURE = 2
BAD_WAVESPEED = 3

KIND_LINEAR = 0
KIND_WENO = 1
KIND_CWENO = 2
KIND_TENO = 3


# ---------------------------------------------------------------------------
# candidate coefficients


@njit(cache=True)
def candidate_coeffs(ubar, ptr, idx, goff, G, nu, out):
    """a = G^T du per stencil, G member-major: out (n_stencils, nu, ncomp)."""
    n = ptr.shape[0] - 1
    ncomp = ubar.shape[1]
    for i in range(n):
        lo = ptr[i]
        hi = ptr[i + 1]
        base = goff[i]
        for l in range(nu):
            for c in range(ncomp):
                out[i, l, c] = 0.0
        for s in range(hi - lo):
            j = idx[lo + s]
            row = base + s * nu
            if ncomp == 4:
                d0 = ubar[j, 0] - ubar[i, 0]
                d1 = ubar[j, 1] - ubar[i, 1]
                d2 = ubar[j, 2] - ubar[i, 2]
                d3 = ubar[j, 3] - ubar[i, 3]
                for l in range(nu):
                    g = G[row + l]
                    out[i, l, 0] += g * d0
                    out[i, l, 1] += g * d1
                    out[i, l, 2] += g * d2
                    out[i, l, 3] += g * d3
            else:
                for c in range(ncomp):
                    d = ubar[j, c] - ubar[i, c]
                    for l in range(nu):
                        out[i, l, c] += G[row + l] * d
    return out


@njit(cache=True)
def directional_coeffs(ubar, ptr, idx, goff, G, nu, owner_cell, out):
    """Same as candidate_coeffs but slots reference their owning cell."""
    n = ptr.shape[0] - 1
    ncomp = ubar.shape[1]
    for s_id in range(n):
        i = owner_cell[s_id]
        lo = ptr[s_id]
        hi = ptr[s_id + 1]
        base = goff[s_id]
        for l in range(nu):
            for c in range(ncomp):
                out[s_id, l, c] = 0.0
        for s in range(hi - lo):
            j = idx[lo + s]
            row = base + s * nu
            if ncomp == 4:
                d0 = ubar[j, 0] - ubar[i, 0]
                d1 = ubar[j, 1] - ubar[i, 1]
                d2 = ubar[j, 2] - ubar[i, 2]
                d3 = ubar[j, 3] - ubar[i, 3]
                for l in range(nu):
                    g = G[row + l]
                    out[s_id, l, 0] += g * d0
                    out[s_id, l, 1] += g * d1
                    out[s_id, l, 2] += g * d2
                    out[s_id, l, 3] += g * d3
            else:
                for c in range(ncomp):
                    d = ubar[j, c] - ubar[i, c]
                    for l in range(nu):
                        out[s_id, l, c] += G[row + l] * d
    return out


@njit(cache=True)
def smoothness_betas(coeffs, B_stack, class_of, out):
    """beta = a^T B a per component: coeffs (n, nu, ncomp)."""
    n, nu, ncomp = coeffs.shape
    for i in range(n):
        B = B_stack[class_of[i]]
        for c in range(ncomp):
            out[i, c] = 0.0
        for l in range(nu):
            if ncomp == 4:
                t0 = 0.0
                t1 = 0.0
                t2 = 0.0
                t3 = 0.0
                for m in range(nu):
                    b = B[l, m]
                    t0 += b * coeffs[i, m, 0]
                    t1 += b * coeffs[i, m, 1]
                    t2 += b * coeffs[i, m, 2]
                    t3 += b * coeffs[i, m, 3]
                out[i, 0] += coeffs[i, l, 0] * t0
                out[i, 1] += coeffs[i, l, 1] * t1
                out[i, 2] += coeffs[i, l, 2] * t2
                out[i, 3] += coeffs[i, l, 3] * t3
            else:
                for c in range(ncomp):
                    t = 0.0
                    for m in range(nu):
                        t += B[l, m] * coeffs[i, m, c]
                    out[i, c] += coeffs[i, l, c] * t
    return out


# ---------------------------------------------------------------------------
# scheme combinations


@njit(cache=True)
def combine_linear(a_c, out):
    n, nu, ncomp = a_c.shape
    for i in range(n):
        for l in range(nu):
            for c in range(ncomp):
                out[i, l, c] = a_c[i, l, c]
    return out


@njit(cache=True)
def combine_weno(a_c, beta_c, a_d, beta_d, dir_start,
                 d_central, d_dir, eps, power, out):
    """All candidates share the full degree; blend coefficient-wise."""
    n, nu, ncomp = a_c.shape
    for i in range(n):
        lo = dir_start[i]
        hi = dir_start[i + 1]
        for c in range(ncomp):
            s = d_central / (beta_c[i, c] + eps) ** power
            total = s
            for k in range(hi - lo):
                total += d_dir / (beta_d[lo + k, c] + eps) ** power
            w_c = s / total
            for l in range(nu):
                out[i, l, c] = w_c * a_c[i, l, c]
            for k in range(hi - lo):
                w = (d_dir / (beta_d[lo + k, c] + eps) ** power) / total
                for l in range(nu):
                    out[i, l, c] += w * a_d[lo + k, l, c]
    return out


@njit(cache=True)
def combine_cweno(a_c, beta_c, a_d, beta_d, dir_start,
                  dK_prime, eps, power, out):
    """P = (w_K/d_K)(P_K - sum d_k P_k) + sum w_k P_k; smalls zero-padded."""
    n, nu, ncomp = a_c.shape
    nu_d = a_d.shape[1]
    d_K = 1.0 - 1.0 / dK_prime
    for i in range(n):
        lo = dir_start[i]
        hi = dir_start[i + 1]
        K = hi - lo
        d_k = (1.0 - d_K) / K
        for c in range(ncomp):
            aK = d_K / (beta_c[i, c] + eps) ** power
            total = aK
            for k in range(K):
                total += d_k / (beta_d[lo + k, c] + eps) ** power
            w_K = aK / total
            scale = w_K / d_K
            for l in range(nu):
                out[i, l, c] = scale * a_c[i, l, c]
            for k in range(K):
                w_k = (d_k / (beta_d[lo + k, c] + eps) ** power) / total
                f = w_k - scale * d_k
                for l in range(nu_d):
                    out[i, l, c] += f * a_d[lo + k, l, c]
    return out


@njit(cache=True)
def combine_teno(a_c, beta_c, a_d, beta_d, dir_start,
                 eps, power, cutoff, per_variable, out, step1_flags):
    """Two-step sharp cut-off; returns count of step-(i) driver decisions.

    step1_flags[i] = 1 when the driver decision for cell i kept the large
    stencil (joint mode: density drives everything; per-variable mode: flag
    set only if every component kept it).
    """
    n, nu, ncomp = a_c.shape
    nu_d = a_d.shape[1]
    for i in range(n):
        lo = dir_start[i]
        hi = dir_start[i + 1]
        K = hi - lo
        n_drivers = ncomp if per_variable else 1
        all_large = True
        for drv in range(n_drivers):
            g_large = 1.0 / (beta_c[i, drv] + eps) ** power
            total = g_large
            for k in range(K):
                total += 1.0 / (beta_d[lo + k, drv] + eps) ** power
            use_large = (g_large / total) >= cutoff
            if per_variable:
                c0 = drv
                c1 = drv + 1
            else:
                c0 = 0
                c1 = ncomp
            if use_large:
                for c in range(c0, c1):
                    for l in range(nu):
                        out[i, l, c] = a_c[i, l, c]
            else:
                all_large = False
                total_s = 0.0
                for k in range(K):
                    total_s += 1.0 / (beta_d[lo + k, drv] + eps) ** power
                n_kept = 0
                for k in range(K):
                    chi = (1.0 / (beta_d[lo + k, drv] + eps) ** power) / total_s
                    if chi >= cutoff:
                        n_kept += 1
                # the largest chi is >= 1/K > cutoff, so n_kept >= 1
                w = 1.0 / n_kept
                for c in range(c0, c1):
                    for l in range(nu):
                        out[i, l, c] = 0.0
                    for k in range(K):
                        chi = (1.0 / (beta_d[lo + k, drv] + eps) ** power) / total_s
                        if chi >= cutoff:
                            for l in range(nu_d):
                                out[i, l, c] += w * a_d[lo + k, l, c]
        step1_flags[i] = 1 if all_large else 0
    count = 0
    for i in range(n):
        count += step1_flags[i]
    return count


# ---------------------------------------------------------------------------
# interface traces


@njit(cache=True)
def face_traces(ubar, coeffs, psi_L, psi_R, face_cells, U_L, U_R):
    """Evaluate each side's polynomial at the face quadrature points."""
    nf, nq, nu = psi_L.shape
    ncomp = ubar.shape[1]
    for f in range(nf):
        il = face_cells[f, 0]
        ir = face_cells[f, 1]
        for q in range(nq):
            if ncomp == 4:
                a0 = ubar[il, 0]
                a1 = ubar[il, 1]
                a2 = ubar[il, 2]
                a3 = ubar[il, 3]
                for l in range(nu):
                    p = psi_L[f, q, l]
                    a0 += p * coeffs[il, l, 0]
                    a1 += p * coeffs[il, l, 1]
                    a2 += p * coeffs[il, l, 2]
                    a3 += p * coeffs[il, l, 3]
                U_L[f, q, 0] = a0
                U_L[f, q, 1] = a1
                U_L[f, q, 2] = a2
                U_L[f, q, 3] = a3
                if ir >= 0:
                    b0 = ubar[ir, 0]
                    b1 = ubar[ir, 1]
                    b2 = ubar[ir, 2]
                    b3 = ubar[ir, 3]
                    for l in range(nu):
                        p = psi_R[f, q, l]
                        b0 += p * coeffs[ir, l, 0]
                        b1 += p * coeffs[ir, l, 1]
                        b2 += p * coeffs[ir, l, 2]
                        b3 += p * coeffs[ir, l, 3]
                    U_R[f, q, 0] = b0
                    U_R[f, q, 1] = b1
                    U_R[f, q, 2] = b2
                    U_R[f, q, 3] = b3
            else:
                for c in range(ncomp):
                    acc = ubar[il, c]
                    for l in range(nu):
                        acc += psi_L[f, q, l] * coeffs[il, l, c]
                    U_L[f, q, c] = acc
                    if ir >= 0:
                        acc2 = ubar[ir, c]
                        for l in range(nu):
                            acc2 += psi_R[f, q, l] * coeffs[ir, l, c]
                        U_R[f, q, c] = acc2
    return U_L


@njit(cache=True)
def check_positivity(U_L, U_R, gamma, info):
    """Scan trace states; info gets (face, side, q) of the first failure."""
    nf, nq, _ = U_L.shape
    for f in range(nf):
        for q in range(nq):
            for side in range(2):
                if side == 0:
                    rho = U_L[f, q, 0]
                    mx = U_L[f, q, 1]
                    my = U_L[f, q, 2]
                    e = U_L[f, q, 3]
                else:
                    rho = U_R[f, q, 0]
                    mx = U_R[f, q, 1]
                    my = U_R[f, q, 2]
                    e = U_R[f, q, 3]
                if rho <= 0.0:
                    info[0] = f
                    info[1] = side
                    info[2] = q
                    return BAD_DENSITY
                p = (gamma - 1.0) * (e - 0.5 * (mx * mx + my * my) / rho)
                if p <= 0.0:
                    info[0] = f
                    info[1] = side
                    info[2] = q
                    return BAD_PRESSURE
    return OK


# ---------------------------------------------------------------------------
# fluxes and residual assembly


@njit(cache=True)
def euler_face_fluxes(U_L, U_R, normal, qw, area, face_cells, vol, gamma,
                      R, info):
    """HLL flux per quadrature point, integrated and scattered.

    Identical arithmetic to the reference path: rotate, Roe wave speeds on
    the normal velocity, three-branch HLL (middle branch in the exact-
    consistency arrangement), rotate back. Interior faces are computed once
    and scattered with opposite signs.
    """
    nf, nq, _ = U_L.shape
    nc = vol.shape[0]
    for i in range(nc):
        R[i, 0] = 0.0
        R[i, 1] = 0.0
        R[i, 2] = 0.0
        R[i, 3] = 0.0
    for f in range(nf):
        nx = normal[f, 0]
        ny = normal[f, 1]
        F0 = 0.0
        F1 = 0.0
        F2 = 0.0
        F3 = 0.0
        for q in range(nq):
            # rotate into the face frame
            rL = U_L[f, q, 0]
            mLn = nx * U_L[f, q, 1] + ny * U_L[f, q, 2]
            mLt = -ny * U_L[f, q, 1] + nx * U_L[f, q, 2]
            eL = U_L[f, q, 3]
            rR = U_R[f, q, 0]
            mRn = nx * U_R[f, q, 1] + ny * U_R[f, q, 2]
            mRt = -ny * U_R[f, q, 1] + nx * U_R[f, q, 2]
            eR = U_R[f, q, 3]
            if rL <= 0.0 or rR <= 0.0:
                info[0] = f
                info[1] = q
                return BAD_DENSITY
            uL = mLn / rL
            vL = mLt / rL
            pL = (gamma - 1.0) * (eL - 0.5 * (mLn * mLn + mLt * mLt) / rL)
            uR = mRn / rR
            vR = mRt / rR
            pR = (gamma - 1.0) * (eR - 0.5 * (mRn * mRn + mRt * mRt) / rR)
            if pL <= 0.0 or pR <= 0.0:
                info[0] = f
                info[1] = q
                return BAD_PRESSURE
            HL = (eL + pL) / rL
            HR = (eR + pR) / rR
            dr = np.sqrt(rR / rL)
            ut = (uL + dr * uR) / (1.0 + dr)
            Ht = (HL + dr * HR) / (1.0 + dr)
            c2 = (gamma - 1.0) * (Ht - 0.5 * ut * ut)
            if c2 <= 0.0:
                info[0] = f
                info[1] = q
                return BAD_WAVESPEED
            ct = np.sqrt(c2)
            cL = np.sqrt(gamma * pL / rL)
            cR = np.sqrt(gamma * pR / rR)
            SL = min(uL - cL, ut - ct)
            SR = max(uR + cR, ut + ct)
            # face-frame physical fluxes
            fL0 = mLn
            fL1 = mLn * uL + pL
            fL2 = mLt * uL
            fL3 = uL * (eL + pL)
            fR0 = mRn
            fR1 = mRn * uR + pR
            fR2 = mRt * uR
            fR3 = uR * (eR + pR)
            if SL >= 0.0:
                h0 = fL0
                h1 = fL1
                h2 = fL2
                h3 = fL3
            elif SR <= 0.0:
                h0 = fR0
                h1 = fR1
                h2 = fR2
                h3 = fR3
            else:
                inv = SL / (SR - SL)
                h0 = fL0 + inv * (fL0 - fR0 + SR * (rR - rL))
                h1 = fL1 + inv * (fL1 - fR1 + SR * (mRn - mLn))
                h2 = fL2 + inv * (fL2 - fR2 + SR * (mRt - mLt))
                h3 = fL3 + inv * (fL3 - fR3 + SR * (eR - eL))
            w = qw[q]
            F0 += w * h0
            F1 += w * (nx * h1 - ny * h2)
            F2 += w * (ny * h1 + nx * h2)
            F3 += w * h3
        a = area[f]
        il = face_cells[f, 0]
        ir = face_cells[f, 1]
        sl = a / vol[il]
        R[il, 0] -= sl * F0
        R[il, 1] -= sl * F1
        R[il, 2] -= sl * F2
        R[il, 3] -= sl * F3
        if ir >= 0:
            sr = a / vol[ir]
            R[ir, 0] += sr * F0
            R[ir, 1] += sr * F1
            R[ir, 2] += sr * F2
            R[ir, 3] += sr * F3
    return OK


@njit(cache=True)
def advection_face_fluxes(U_L, U_R, vn_table, qw, area, face_cells, vol, R):
    """Upwind scalar flux with a precomputed v.n table per quad point."""
    nf, nq, _ = U_L.shape
    nc = vol.shape[0]
    for i in range(nc):
        R[i, 0] = 0.0
    for f in range(nf):
        F = 0.0
        for q in range(nq):
            vn = vn_table[f, q]
            if vn >= 0.0:
                F += qw[q] * vn * U_L[f, q, 0]
            else:
                F += qw[q] * vn * U_R[f, q, 0]
        a = area[f]
        il = face_cells[f, 0]
        ir = face_cells[f, 1]
        R[il, 0] -= F * a / vol[il]
        if ir >= 0:
            R[ir, 0] += F * a / vol[ir]
    return OK


@njit(cache=True)
def euler_cell_wavespeed(ubar, gamma, out):
    """|u| + c from cell averages; status if a cell average is unphysical."""
    nc = ubar.shape[0]
    for i in range(nc):
        rho = ubar[i, 0]
        if rho <= 0.0:
            out[i] = -1.0
            return BAD_DENSITY
        u = ubar[i, 1] / rho
        v = ubar[i, 2] / rho
        p = (gamma - 1.0) * (ubar[i, 3] - 0.5 * rho * (u * u + v * v))
        if p <= 0.0:
            out[i] = -1.0
            return BAD_PRESSURE
        out[i] = np.sqrt(u * u + v * v) + np.sqrt(gamma * p / rho)
    return OK

"""Compressible Euler state algebra and interface fluxes.

Conservative state vectors are arrays with a trailing axis of length 4
holding (rho, rho*u, rho*v, E); primitive vectors hold (rho, u, v, p).
All operations broadcast over leading axes.

Face fluxes use rotational invariance: F^n(U) = T^-1 F^x(T U), where T
rotates velocity into the (normal, tangential) frame and leaves density
and energy untouched. The interface flux is HLL with Roe-averaged wave
speed estimates.
"""
from __future__ import annotations

import numpy as np

Array = np.ndarray

GAMMA = 1.4


class PositivityError(Exception):
    """Non-physical density or pressure."""

    def __init__(self, message: str, cell=None, time=None):
        if cell is not None:
            message += f" (cell {cell}"
            message += f", t={time:.6g})" if time is not None else ")"
        super().__init__(message)
        self.cell = cell
        self.time = time


class WaveSpeedError(Exception):
    """Roe average produced a non-positive squared sound speed."""


def cons_to_prim(U: Array, gamma: float = GAMMA, cell=None, time=None) -> Array:
    U = np.asarray(U, dtype=np.float64)
    rho = U[..., 0]
    if np.any(rho <= 0.0):
        raise PositivityError(f"non-positive density {rho.min():.6g}",
                              cell=cell, time=time)
    W = np.empty_like(U)
    W[..., 0] = rho
    W[..., 1] = U[..., 1] / rho
    W[..., 2] = U[..., 2] / rho
    W[..., 3] = (gamma - 1.0) * (
        U[..., 3] - 0.5 * (U[..., 1] ** 2 + U[..., 2] ** 2) / rho)
    if np.any(W[..., 3] <= 0.0):
        raise PositivityError(f"non-positive pressure {W[..., 3].min():.6g}",
                              cell=cell, time=time)
    return W


def prim_to_cons(W: Array, gamma: float = GAMMA) -> Array:
    W = np.asarray(W, dtype=np.float64)
    U = np.empty_like(W)
    rho = W[..., 0]
    U[..., 0] = rho
    U[..., 1] = rho * W[..., 1]
    U[..., 2] = rho * W[..., 2]
    U[..., 3] = W[..., 3] / (gamma - 1.0) + 0.5 * rho * (
        W[..., 1] ** 2 + W[..., 2] ** 2)
    return U


def sound_speed(W: Array, gamma: float = GAMMA) -> Array:
    return np.sqrt(gamma * W[..., 3] / W[..., 0])


def total_enthalpy(W: Array, gamma: float = GAMMA) -> Array:
    """(E + p) / rho."""
    return (gamma / (gamma - 1.0)) * W[..., 3] / W[..., 0] + 0.5 * (
        W[..., 1] ** 2 + W[..., 2] ** 2)


def flux_x(U: Array, gamma: float = GAMMA) -> Array:
    U = np.asarray(U, dtype=np.float64)
    rho = U[..., 0]
    u = U[..., 1] / rho
    p = (gamma - 1.0) * (U[..., 3] - 0.5 * (U[..., 1] ** 2 + U[..., 2] ** 2) / rho)
    F = np.empty_like(U)
    F[..., 0] = U[..., 1]
    F[..., 1] = U[..., 1] * u + p
    F[..., 2] = U[..., 2] * u
    F[..., 3] = u * (U[..., 3] + p)
    return F


def rotate(U: Array, n: Array) -> Array:
    """Map momentum (or velocity) into the (normal, tangential) frame."""
    U = np.asarray(U, dtype=np.float64)
    n = np.asarray(n, dtype=np.float64)
    out = U.copy()
    nx, ny = n[..., 0], n[..., 1]
    out[..., 1] = nx * U[..., 1] + ny * U[..., 2]
    out[..., 2] = -ny * U[..., 1] + nx * U[..., 2]
    return out


def rotate_back(F: Array, n: Array) -> Array:
    F = np.asarray(F, dtype=np.float64)
    n = np.asarray(n, dtype=np.float64)
    out = F.copy()
    nx, ny = n[..., 0], n[..., 1]
    out[..., 1] = nx * F[..., 1] - ny * F[..., 2]
    out[..., 2] = ny * F[..., 1] + nx * F[..., 2]
    return out


def roe_wave_speeds(W_L: Array, W_R: Array, gamma: float = GAMMA):
    """Acoustic wave-speed estimates from Roe averages.

    u is the velocity component normal to the face (states already
    rotated). The Roe sound speed uses the normal kinetic energy only:
    c~ = sqrt((gamma-1)(H~ - u~^2/2)).
    """
    W_L = np.asarray(W_L, dtype=np.float64)
    W_R = np.asarray(W_R, dtype=np.float64)
    d_rho = np.sqrt(W_R[..., 0] / W_L[..., 0])
    u_t = (W_L[..., 1] + d_rho * W_R[..., 1]) / (1.0 + d_rho)
    H_t = (total_enthalpy(W_L, gamma) + d_rho * total_enthalpy(W_R, gamma)) / (1.0 + d_rho)
    c2 = (gamma - 1.0) * (H_t - 0.5 * u_t ** 2)
    if np.any(c2 <= 0.0):
        raise WaveSpeedError(
            f"Roe average sound speed failed: H - u^2/2 = {(c2 / (gamma - 1.0)).min():.6g}")
    c_t = np.sqrt(c2)
    c_L = sound_speed(W_L, gamma)
    c_R = sound_speed(W_R, gamma)
    S_L = np.minimum(W_L[..., 1] - c_L, u_t - c_t)
    S_R = np.maximum(W_R[..., 1] + c_R, u_t + c_t)
    return S_L, S_R


def hll_flux(U_L: Array, U_R: Array, gamma: float = GAMMA) -> Array:
    """HLL flux for face-frame states (normal velocity in slot 1)."""
    U_L = np.asarray(U_L, dtype=np.float64)
    U_R = np.asarray(U_R, dtype=np.float64)
    W_L = cons_to_prim(U_L, gamma)
    W_R = cons_to_prim(U_R, gamma)
    S_L, S_R = roe_wave_speeds(W_L, W_R, gamma)
    F_L = flux_x(U_L, gamma)
    F_R = flux_x(U_R, gamma)
    S_L4 = S_L[..., None]
    S_R4 = S_R[..., None]
    # (S_R F_L - S_L F_R + S_L S_R dU) / (S_R - S_L), rearranged so equal
    # states reproduce F_L exactly
    middle = F_L + S_L4 * (F_L - F_R + S_R4 * (U_R - U_L)) / (S_R4 - S_L4)
    out = np.where(S_L4 >= 0.0, F_L, np.where(S_R4 <= 0.0, F_R, middle))
    return out


def normal_flux(U_L: Array, U_R: Array, n: Array, gamma: float = GAMMA) -> Array:
    """Global-frame HLL flux through a face with unit normal n."""
    F_hat = hll_flux(rotate(U_L, n), rotate(U_R, n), gamma)
    return rotate_back(F_hat, n)


def advection_flux(u_L: Array, u_R: Array, n: Array, velocity: Array) -> Array:
    """Upwind flux for linear advection with a face-local velocity."""
    n = np.asarray(n, dtype=np.float64)
    velocity = np.asarray(velocity, dtype=np.float64)
    vn = velocity[..., 0] * n[..., 0] + velocity[..., 1] * n[..., 1]
    return np.where(vn >= 0.0, vn * np.asarray(u_L), vn * np.asarray(u_R))

"""Micro-macro decomposition: the five-function macroscopic basis and P0/P1.

The inner product is <h,g>_W = sum_k w_k h_k g_k / W_k for a strictly positive
weight W (usually a Maxwellian).  The analytic basis

    chi_0 = M / sqrt(rho)
    chi_i = (xi_i - u_i) M / sqrt(R theta rho),  i = 1..3
    chi_4 = (|xi-u|^2/(R theta) - 3) M / sqrt(6 rho)

is orthonormal in <.,.>_M up to quadrature error; a discrete Gram-Schmidt pass
makes it orthonormal in floating point, so the projection algebra (P0 P0 = P0,
P0 P1 = 0, ...) holds to rounding rather than to quadrature tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .velocity_space import (
    R_GAS,
    InvalidStateError,
    VelocityGrid,
    maxwellian,
    moments,
    primitive_from_conserved,
)


@dataclass(eq=False)
class MacroBasis:
    """Discretely orthonormal macroscopic basis attached to one fluid state."""

    rho: float
    u: np.ndarray
    theta: float
    chi: np.ndarray          # (5, Nv), orthonormal in <.,.>_M after Gram-Schmidt
    weight_m: np.ndarray     # the local Maxwellian used as inner-product weight
    grid: VelocityGrid
    gram_raw: np.ndarray     # Gram matrix of the analytic basis, pre-GS

    def inner(self, h: np.ndarray, g: np.ndarray) -> float:
        return weighted_inner(h, g, self.weight_m, self.grid)

    def coefficients(self, h: np.ndarray) -> np.ndarray:
        """<h, chi_j>_M for j = 0..4."""
        return (self.chi * (self.grid.weights * h / self.weight_m)).sum(axis=1)

    def p0(self, h: np.ndarray) -> np.ndarray:
        return self.coefficients(h) @ self.chi

    def p1(self, h: np.ndarray) -> np.ndarray:
        return h - self.p0(h)

    def p0_matrix(self) -> np.ndarray:
        """Dense matrix of P0 acting on nodal vectors (used by operator assembly)."""
        d = self.grid.weights / self.weight_m
        return self.chi.T @ (self.chi * d)


@dataclass
class MicroMacroSplit:
    macro: np.ndarray
    micro: np.ndarray


def analytic_chi(rho: float, u, theta: float, grid: VelocityGrid) -> np.ndarray:
    m = maxwellian(rho, u, theta, grid)
    c = grid.nodes - np.asarray(u, dtype=float)
    c2 = np.sum(c**2, axis=1)
    chi = np.empty((5, grid.size))
    chi[0] = m / np.sqrt(rho)
    for i in range(3):
        chi[1 + i] = c[:, i] * m / np.sqrt(R_GAS * theta * rho)
    chi[4] = (c2 / (R_GAS * theta) - 3.0) * m / np.sqrt(6.0 * rho)
    return chi


def build_basis(rho: float, u, theta: float, grid: VelocityGrid) -> MacroBasis:
    """Evaluate the analytic chi on the grid, then re-orthonormalize discretely."""
    if rho <= 0 or theta <= 0:
        raise InvalidStateError(f"degenerate state (rho={rho}, theta={theta})")
    u = np.asarray(u, dtype=float)
    m = maxwellian(rho, u, theta, grid)
    chi = analytic_chi(rho, u, theta, grid)
    d = grid.weights / m
    gram_raw = (chi * d) @ chi.T

    # modified Gram-Schmidt in the <.,.>_M inner product
    q = chi.copy()
    for j in range(5):
        for i in range(j):
            q[j] -= float((q[i] * d) @ q[j]) * q[i]
        nrm = np.sqrt(float((q[j] * d) @ q[j]))
        if nrm <= 0 or not np.isfinite(nrm):
            raise InvalidStateError("macro basis degenerate on this grid")
        q[j] /= nrm
    return MacroBasis(rho=rho, u=u, theta=theta, chi=q, weight_m=m, grid=grid,
                      gram_raw=gram_raw)


def basis_from_slice(f_slice: np.ndarray, grid: VelocityGrid) -> MacroBasis:
    """Basis at the slice's own discrete moments (the local Maxwellian state)."""
    rho, u, theta = primitive_from_conserved(moments(f_slice, grid))
    return build_basis(rho, u, theta, grid)


def project(f_slice: np.ndarray, basis: MacroBasis, verify_state: bool = True) -> MicroMacroSplit:
    """Split f into P0 f + P1 f; the basis must match f's own fluid state."""
    if verify_state:
        rho, u, theta = primitive_from_conserved(moments(f_slice, basis.grid))
        scale = abs(rho) + np.linalg.norm(u) + abs(theta)
        mismatch = (
            abs(rho - basis.rho) + np.linalg.norm(u - basis.u) + abs(theta - basis.theta)
        )
        if mismatch > 1e-6 * scale:
            raise ValueError(
                f"basis state {(basis.rho, tuple(basis.u), basis.theta)} does not match "
                f"slice moments {(rho, tuple(u), theta)} (relative mismatch {mismatch / scale:.3e})"
            )
    macro = basis.p0(f_slice)
    return MicroMacroSplit(macro=macro, micro=f_slice - macro)


def weighted_inner(h: np.ndarray, g: np.ndarray, weight_slice: np.ndarray,
                   grid: VelocityGrid) -> float:
    if np.any(weight_slice <= 0):
        raise ValueError("inner-product weight must be strictly positive")
    return float((grid.weights * h * g / weight_slice).sum())


def weighted_l2_error(f_slice: np.ndarray, ref_slice: np.ndarray,
                      mstar_slice: np.ndarray, grid: VelocityGrid) -> float:
    """Discrete int |f - M_ref|^2 / M* dxi, the integrand of the limit bound."""
    if f_slice.shape != ref_slice.shape or f_slice.shape != mstar_slice.shape:
        raise ValueError("slice shapes do not match")
    if np.any(mstar_slice <= 0):
        raise ValueError("reference global Maxwellian must be strictly positive")
    diff = f_slice - ref_slice
    return float((grid.weights * diff * diff / mstar_slice).sum())


def mstar_window_ok(theta: float, theta_star: float) -> bool:
    """Dissipation-window condition theta/2 < theta* < theta for the global Maxwellian."""
    return 0.5 * theta < theta_star < theta

"""Discrete velocity grids, quadrature, Maxwellians, and the moment map.

All velocity-space integrals in the package reduce to weighted sums over a
fixed product grid.  The gas constant is hard-wired to R = 2/3 so that the
internal energy per unit mass equals the temperature (E = 3R*theta/2 = theta)
and the pressure is p = 2*rho*theta/3.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

R_GAS = 2.0 / 3.0

# Default quadrature tolerance: moments of near-reference Maxwellians on the
# default grid agree with the closed-form Gaussian values to this accuracy.
TOL_QUAD = 1e-8


class InvalidStateError(ValueError):
    """A macroscopic state violates positivity (rho > 0, theta > 0)."""


@dataclass(frozen=True, eq=False)
class VelocityGrid:
    """Product-rule velocity grid on a truncated box, symmetric under xi -> -xi.

    nodes   : (Nv, 3) node coordinates, z-axis fastest (C order of the mesh)
    weights : (Nv,) strictly positive quadrature weights
    axes    : per-axis 1d node arrays
    counts  : per-axis node counts
    extent  : (3, 2) lo/hi bounds per axis
    """

    nodes: np.ndarray
    weights: np.ndarray
    axes: tuple
    counts: tuple
    extent: np.ndarray
    spacing: np.ndarray
    rule: str = "product_trapezoid"

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    def metadata(self) -> dict:
        return {
            "rule": self.rule,
            "counts": list(self.counts),
            "extent": [[float(lo), float(hi)] for lo, hi in self.extent],
            "spacing": [float(h) for h in self.spacing],
        }


@dataclass
class FluidMoments:
    """The five conserved quantities: mass, momentum, total energy density."""

    rho: float
    m: np.ndarray
    etot: float

    def validate(self) -> None:
        if not np.isfinite(self.rho) or self.rho <= 0.0:
            raise InvalidStateError(f"nonpositive density rho={self.rho}")
        internal = self.etot - 0.5 * float(self.m @ self.m) / self.rho
        if not np.isfinite(internal) or internal <= 0.0:
            raise InvalidStateError(f"nonpositive internal energy {internal}")


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform cell-centred 1d grid on [lo, hi]."""

    lo: float
    hi: float
    nx: int

    @property
    def dx(self) -> float:
        return (self.hi - self.lo) / self.nx

    @property
    def x(self) -> np.ndarray:
        return self.lo + (np.arange(self.nx) + 0.5) * self.dx

    def metadata(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "nx": self.nx}


@dataclass
class DistributionField:
    """f(x_i, xi_k) on a spatial grid x velocity grid.

    Negative entries are tolerated (transport schemes may undershoot) but the
    fraction of negative mass is tracked by the solvers as a diagnostic.
    """

    values: np.ndarray
    xgrid: SpatialGrid
    vgrid: VelocityGrid
    frame: str = "eulerian"
    time: float = 0.0

    def __post_init__(self):
        if self.values.shape != (self.xgrid.nx, self.vgrid.size):
            raise ValueError(
                f"shape {self.values.shape} inconsistent with "
                f"{self.xgrid.nx} cells x {self.vgrid.size} velocity nodes"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite entries in distribution field")


def build_velocity_grid(
    counts=(16, 12, 12),
    extent_multiplier: float = 6.0,
    theta_max: float = 1.0,
    center=(0.0, 0.0, 0.0),
) -> VelocityGrid:
    """Symmetric product-trapezoid grid spanning center +- em*sqrt(R*theta_max).

    The trapezoid rule on a box is spectrally accurate for Gaussians once the
    box covers ~6 thermal widths, which keeps the truncation error of
    reference-Maxwellian moments below TOL_QUAD.
    """
    counts = tuple(int(c) for c in counts)
    if len(counts) != 3 or any(c < 8 for c in counts):
        raise ValueError(f"counts must be >= 8 per axis, got {counts}")
    if extent_multiplier < 4:
        raise ValueError(f"extent_multiplier must be >= 4, got {extent_multiplier}")
    if theta_max <= 0:
        raise ValueError(f"theta_max must be positive, got {theta_max}")

    half = extent_multiplier * np.sqrt(R_GAS * theta_max)
    axes = []
    axis_weights = []
    extent = np.empty((3, 2))
    spacing = np.empty(3)
    for a in range(3):
        lo, hi = center[a] - half, center[a] + half
        pts = np.linspace(lo, hi, counts[a])
        h = pts[1] - pts[0]
        w = np.full(counts[a], h)
        w[0] *= 0.5
        w[-1] *= 0.5
        axes.append(pts)
        axis_weights.append(w)
        extent[a] = (lo, hi)
        spacing[a] = h

    gx, gy, gz = np.meshgrid(*axes, indexing="ij")
    nodes = np.stack([gx.ravel(), gy.ravel(), gz.ravel()], axis=1)
    wx, wy, wz = np.meshgrid(*axis_weights, indexing="ij")
    weights = (wx * wy * wz).ravel()
    return VelocityGrid(
        nodes=nodes,
        weights=weights,
        axes=tuple(axes),
        counts=counts,
        extent=extent,
        spacing=spacing,
    )


def maxwellian(rho: float, u, theta: float, grid: VelocityGrid) -> np.ndarray:
    """M_[rho,u,theta](xi_k) = rho (2 pi R theta)^{-3/2} exp(-|xi-u|^2 / 2 R theta)."""
    if rho <= 0 or theta <= 0:
        raise InvalidStateError(f"maxwellian needs rho, theta > 0, got ({rho}, {theta})")
    u = np.asarray(u, dtype=float)
    c2 = np.sum((grid.nodes - u) ** 2, axis=1)
    return rho / np.sqrt((2.0 * np.pi * R_GAS * theta) ** 3) * np.exp(-c2 / (2.0 * R_GAS * theta))


def moments(f_slice: np.ndarray, grid: VelocityGrid) -> FluidMoments:
    """Discrete mass / momentum / total-energy moments of one velocity slice."""
    f_slice = np.asarray(f_slice)
    if f_slice.shape != (grid.size,):
        raise ValueError(f"slice shape {f_slice.shape} does not match grid size {grid.size}")
    wf = grid.weights * f_slice
    rho = float(wf.sum())
    m = wf @ grid.nodes
    etot = float(0.5 * wf @ np.sum(grid.nodes**2, axis=1))
    return FluidMoments(rho=rho, m=m, etot=etot)


def field_moments(values: np.ndarray, grid: VelocityGrid):
    """Vectorised moments for an (Nx, Nv) array: returns (rho, m, etot) arrays."""
    wf = values * grid.weights
    rho = wf.sum(axis=1)
    m = wf @ grid.nodes
    etot = 0.5 * wf @ np.sum(grid.nodes**2, axis=1)
    return rho, m, etot


def primitive_from_conserved(mom: FluidMoments):
    """Invert the moment map: (rho, m, Etot) -> (rho, u, theta) with E = theta."""
    mom.validate()
    u = mom.m / mom.rho
    theta = mom.etot / mom.rho - 0.5 * float(u @ u)
    if theta <= 0:
        raise InvalidStateError(f"nonpositive temperature theta={theta}")
    return mom.rho, u, theta


def primitive_fields(values: np.ndarray, grid: VelocityGrid):
    """(Nx, Nv) distribution -> (rho, u, theta) arrays; raises on vacuum cells."""
    rho, m, etot = field_moments(values, grid)
    if np.any(rho <= 0) or not np.all(np.isfinite(rho)):
        raise InvalidStateError("nonpositive density in distribution field")
    u = m / rho[:, None]
    theta = etot / rho - 0.5 * np.sum(u**2, axis=1)
    if np.any(theta <= 0):
        raise InvalidStateError("nonpositive temperature in distribution field")
    return rho, u, theta

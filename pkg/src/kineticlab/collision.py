"""Collision models: BGK relaxation and hard-sphere Boltzmann by quadrature.

Both models share the structural properties that the hydrodynamic-limit
experiments rely on: they annihilate Maxwellians, conserve the five invariant
moments (enforced discretely by subtracting the macroscopic projection of the
raw output), and are dissipative on the microscopic subspace.  The linearized
operator L_M h = 2 Q(M, h) is realized either diagonally (BGK) or as a dense
matrix assembled once per state (hard sphere).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.linalg import lu_factor, lu_solve
from scipy.sparse.linalg import LinearOperator, eigsh

from . import _hs_kernels as hsk
from .micromacro import MacroBasis, build_basis, mstar_window_ok, weighted_inner
from .velocity_space import (
    R_GAS,
    InvalidStateError,
    VelocityGrid,
    maxwellian,
    moments,
    primitive_from_conserved,
)


class WindowViolationError(ValueError):
    """The global Maxwellian violates the theta/2 < theta* < theta window."""


class CertificationError(RuntimeError):
    """A measured operator property failed (nonpositive coercivity, ...)."""


@dataclass
class CollisionModel:
    kind: str = "bgk"                    # "bgk" | "hard_sphere"
    nu0: float = 1.0                     # BGK relaxation rate
    angular: tuple = (8, 8)              # (n_polar, n_azimuth) sphere quadrature
    kernel_bounds: Optional[tuple] = None  # (nu_lower, c, kappa) after certification

    def __post_init__(self):
        if self.kind not in ("bgk", "hard_sphere"):
            raise ValueError(f"unknown collision kind {self.kind!r}")
        if self.kind == "bgk" and self.nu0 <= 0:
            raise ValueError("BGK relaxation rate nu0 must be positive")
        if self.kind == "hard_sphere" and (self.angular[0] < 8 or self.angular[1] < 8):
            raise ValueError(f"angular counts must be >= (8, 8), got {self.angular}")

    def metadata(self) -> dict:
        return {"kind": self.kind, "nu0": self.nu0, "angular": list(self.angular)}


def angular_grid(n_polar: int, n_azimuth: int):
    """Full-sphere product rule: Gauss-Legendre in cos(polar) x midpoint azimuth.

    Weights sum to 4*pi; hemisphere integrals of even integrands are half the
    full-sphere sum.
    """
    mu, wmu = leggauss(n_polar)
    phi = (np.arange(n_azimuth) + 0.5) * (2.0 * np.pi / n_azimuth)
    wphi = 2.0 * np.pi / n_azimuth
    smu = np.sqrt(1.0 - mu**2)
    omegas = np.empty((n_polar * n_azimuth, 3))
    ow = np.empty(n_polar * n_azimuth)
    k = 0
    for i in range(n_polar):
        for j in range(n_azimuth):
            omegas[k] = (smu[i] * np.cos(phi[j]), smu[i] * np.sin(phi[j]), mu[i])
            ow[k] = wmu[i] * wphi
            k += 1
    return omegas, ow


_ANGULAR_CACHE: dict = {}
_STABLE_CACHE: dict = {}


def _angular(angular):
    key = tuple(angular)
    if key not in _ANGULAR_CACHE:
        _ANGULAR_CACHE[key] = angular_grid(*key)
    return _ANGULAR_CACHE[key]


def _grid_key(grid: VelocityGrid, angular) -> tuple:
    return (grid.counts, grid.extent.tobytes(), tuple(angular))


def _angular_table(grid: VelocityGrid, angular) -> np.ndarray:
    key = _grid_key(grid, angular)
    if key not in _STABLE_CACHE:
        omegas, ow = _angular(angular)
        nx, ny, nz = grid.counts
        hx, hy, hz = grid.spacing
        _STABLE_CACHE[key] = hsk.build_angular_table(nx, ny, nz, hx, hy, hz, omegas, ow)
    return _STABLE_CACHE[key]


def _axis_weights(grid: VelocityGrid):
    wx = np.full(grid.counts[0], grid.spacing[0])
    wx[0] *= 0.5
    wx[-1] *= 0.5
    wy = np.full(grid.counts[1], grid.spacing[1])
    wy[0] *= 0.5
    wy[-1] *= 0.5
    wz = np.full(grid.counts[2], grid.spacing[2])
    wz[0] *= 0.5
    wz[-1] *= 0.5
    return wx, wy, wz


def _conservation_basis(f_slice: np.ndarray, grid: VelocityGrid) -> MacroBasis:
    """Basis whose P0 spans the discrete collision invariants.

    Any positive state works (chi_j / M spans {1, xi, |xi|^2} regardless), so
    fall back to the grid reference state when the slice has invalid moments.
    """
    try:
        rho, u, theta = primitive_from_conserved(moments(f_slice, grid))
        return build_basis(rho, u, theta, grid)
    except InvalidStateError:
        theta_ref = (0.5 * (grid.extent[0, 1] - grid.extent[0, 0]) / 6.0) ** 2 / R_GAS
        return build_basis(1.0, np.zeros(3), theta_ref, grid)


def conservation_correction(q_slice: np.ndarray, basis: MacroBasis) -> np.ndarray:
    """Remove the macroscopic projection so all five invariant moments vanish."""
    return basis.p1(q_slice)


def bgk_collision(f_slice: np.ndarray, grid: VelocityGrid, nu0: float) -> np.ndarray:
    """nu0 (M_[moments f] - f), conservation-corrected to exact moment zeros."""
    rho, u, theta = primitive_from_conserved(moments(f_slice, grid))
    basis = build_basis(rho, u, theta, grid)
    raw = nu0 * (basis.weight_m - f_slice)
    return conservation_correction(raw, basis)


def hard_sphere_Q(
    f_slice: np.ndarray,
    g_slice: np.ndarray,
    grid: VelocityGrid,
    angular=(8, 8),
    conserve: bool = True,
    subtract_equilibrium: bool = False,
    stats: Optional[dict] = None,
) -> np.ndarray:
    """Direct quadrature of the symmetric bilinear hard-sphere operator.

    subtract_equilibrium (f is g only): subtract the discrete Q(M,M) at the
    slice's own Maxwellian, an analytically-zero term that cancels the
    systematic trilinear interpolation bias so discrete equilibria annihilate.
    """
    if angular[0] < 8 or angular[1] < 8:
        raise ValueError(f"angular grid too coarse: {angular}, need >= (8, 8)")
    nx, ny, nz = grid.counts
    hx, hy, hz = grid.spacing
    omegas, ow = _angular(angular)
    table = _angular_table(grid, angular)
    wx, wy, wz = _axis_weights(grid)
    same = f_slice is g_slice or np.array_equal(f_slice, g_slice)

    f3 = np.ascontiguousarray(f_slice.reshape(nx, ny, nz))
    if same:
        gain, dropped, total = hsk.gain_same(f3, wx, wy, wz, hx, hy, hz, omegas, ow)
        corr = hsk.weighted_corr(f3, wx, wy, wz, table)
        q = gain - 0.5 * f3 * corr
    else:
        g3 = np.ascontiguousarray(g_slice.reshape(nx, ny, nz))
        gain, dropped, total = hsk.gain_pair(f3, g3, wx, wy, wz, hx, hy, hz, omegas, ow)
        corr_g = hsk.weighted_corr(g3, wx, wy, wz, table)
        corr_f = hsk.weighted_corr(f3, wx, wy, wz, table)
        q = gain - 0.25 * (f3 * corr_g + g3 * corr_f)
    q = q.reshape(grid.size)

    if subtract_equilibrium:
        if not same:
            raise ValueError("equilibrium subtraction is defined for Q(f, f) only")
        rho, u, theta = primitive_from_conserved(moments(f_slice, grid))
        meq = maxwellian(rho, u, theta, grid)
        m3 = np.ascontiguousarray(meq.reshape(nx, ny, nz))
        gain_m, _, _ = hsk.gain_same(m3, wx, wy, wz, hx, hy, hz, omegas, ow)
        corr_m = hsk.weighted_corr(m3, wx, wy, wz, table)
        q = q - (gain_m - 0.5 * m3 * corr_m).reshape(grid.size)

    if stats is not None or conserve:
        # the correction basis must be symmetric in (f, g) to keep Q(f,g) = Q(g,f)
        src = f_slice if same else 0.5 * (f_slice + g_slice)
        basis0 = _conservation_basis(src, grid)
    if stats is not None:
        stats["dropped_fraction"] = float(dropped / total) if total > 0 else 0.0
        stats["moment_defect"] = [float(c) for c in basis0.coefficients(q)]
    if conserve:
        q = conservation_correction(q, basis0)
    return q


@dataclass
class FrequencyEnvelope:
    nu_lower: float
    c: float
    kappa: float


def collision_frequency(grid: VelocityGrid, maxwellian_slice: np.ndarray,
                        model: CollisionModel):
    """Multiplicative part nu(xi) of -L_M, with the fitted growth envelope.

    Hard sphere: nu(xi_k) = int int_{S^2+} M(xi_*) |(xi_k - xi_*, Omega)| dOmega dxi_*.
    The envelope 0 < nu_lower <= nu <= c (1+|xi|)^kappa is fitted on the grid.
    """
    if model.kind == "bgk":
        nu = np.full(grid.size, model.nu0)
        return nu, FrequencyEnvelope(nu_lower=model.nu0, c=model.nu0, kappa=0.0)
    nx, ny, nz = grid.counts
    table = _angular_table(grid, model.angular)
    wx, wy, wz = _axis_weights(grid)
    m3 = np.ascontiguousarray(maxwellian_slice.reshape(nx, ny, nz))
    nu = 0.5 * hsk.weighted_corr(m3, wx, wy, wz, table).reshape(grid.size)

    speed = np.linalg.norm(grid.nodes, axis=1)
    # envelope exponent: chord slope between the slowest and fastest shells
    # (a least-squares fit over nodes would be dominated by the corner shells,
    # where the local slope against (1 + |xi|) exceeds the asymptotic one)
    bins = np.linspace(0.0, speed.max() * (1 + 1e-12), 13)
    idx = np.digitize(speed, bins) - 1
    shells = [(np.log1p(speed[idx == b].mean()), np.log(nu[idx == b].mean()))
              for b in range(len(bins) - 1) if np.any(idx == b)]
    (r0, v0), (r1, v1) = shells[0], shells[-1]
    kappa = float((v1 - v0) / (r1 - r0))
    c = float(np.max(nu / (1.0 + speed) ** kappa))
    return nu, FrequencyEnvelope(nu_lower=float(nu.min()), c=c, kappa=kappa)


@dataclass(eq=False)
class LinearizedOperator:
    """h -> L_M h = 2 Q(M, h), with a solver on the microscopic subspace.

    The hard-sphere matrix is stored in symmetrized coordinates
    h~ = h sqrt(w / M), in which L is near-symmetric, the macroscopic
    projector is orthogonal (rows chi~ = chi sqrt(w/M) are orthonormal) and the
    restricted system is well conditioned; in raw nodal coordinates the
    M-weighted residual norm would amplify roundoff at far-tail nodes by 1/M.
    """

    kind: str
    basis: MacroBasis
    grid: VelocityGrid
    nu: np.ndarray
    nu0: float = 1.0
    matrix_sym: Optional[np.ndarray] = None      # P1~ A~ P1~, hard sphere only
    dw: Optional[np.ndarray] = None              # sqrt(w / M)
    chi_sym: Optional[np.ndarray] = None         # (5, Nv) orthonormal rows
    _lu: Optional[tuple] = field(default=None, repr=False)

    @property
    def state(self):
        return (self.basis.rho, self.basis.u, self.basis.theta)

    def apply(self, h: np.ndarray) -> np.ndarray:
        """P1 L_M P1 h (the null-space-enforced action)."""
        if self.kind == "bgk":
            return -self.nu0 * self.basis.p1(h)
        return (self.matrix_sym @ (h * self.dw)) / self.dw

    def solve_microscopic(self, rhs: np.ndarray) -> np.ndarray:
        return solve_LM_inverse(self, rhs)


def build_linearized(rho: float, u, theta: float, grid: VelocityGrid,
                     model: CollisionModel) -> LinearizedOperator:
    """BGK: -nu0 P1.  Hard sphere: dense assembly, null space enforced by P1 . P1."""
    basis = build_basis(rho, u, theta, grid)
    nu, _ = collision_frequency(grid, basis.weight_m, model)
    if model.kind == "bgk":
        return LinearizedOperator(kind="bgk", basis=basis, grid=grid, nu=nu,
                                  nu0=model.nu0)

    nx, ny, nz = grid.counts
    hx, hy, hz = grid.spacing
    omegas, ow = _angular(model.angular)
    table = _angular_table(grid, model.angular)
    wx, wy, wz = _axis_weights(grid)
    m3 = np.ascontiguousarray(basis.weight_m.reshape(nx, ny, nz))
    a = hsk.assemble_linearized(m3, wx, wy, wz, hx, hy, hz, omegas, ow, table)
    if not np.all(np.isfinite(a)):
        raise RuntimeError("linearized operator assembly produced non-finite entries")
    dw = np.sqrt(grid.weights / basis.weight_m)
    a_sym = (dw[:, None] * a) / dw[None, :]
    chi_sym = basis.chi * dw[None, :]
    # sandwich P1~ A~ P1~ with the orthogonal projector P0~ = chi~^T chi~
    ca = chi_sym @ a_sym
    a_sym -= chi_sym.T @ ca
    ac = a_sym @ chi_sym.T
    a_sym -= ac @ chi_sym
    lu = lu_factor(a_sym + chi_sym.T @ chi_sym)
    return LinearizedOperator(kind="hard_sphere", basis=basis, grid=grid, nu=nu,
                              nu0=model.nu0, matrix_sym=a_sym, dw=dw,
                              chi_sym=chi_sym, _lu=lu)


def solve_LM_inverse(op: LinearizedOperator, rhs_slice: np.ndarray) -> np.ndarray:
    """Solve L_M h = rhs with h in the microscopic subspace.

    rhs must be microscopic; the solution is confirmed to residual 1e-10
    relative (a singular restricted system signals certification failure).
    """
    d = op.grid.weights / op.basis.weight_m
    nrm = np.sqrt(float((rhs_slice * d) @ rhs_slice))
    p0rhs = op.basis.p0(rhs_slice)
    p0nrm = np.sqrt(float((p0rhs * d) @ p0rhs))
    if nrm == 0.0:
        return np.zeros_like(rhs_slice)
    if p0nrm > 1e-8 * nrm:
        raise ValueError(
            f"rhs is not microscopic: |P0 rhs| = {p0nrm:.3e} > 1e-8 |rhs| = {1e-8 * nrm:.3e}"
        )
    if op.kind == "bgk":
        return -op.basis.p1(rhs_slice) / op.nu0
    rhs_sym = rhs_slice * op.dw
    x = lu_solve(op._lu, rhs_sym)
    x -= op.chi_sym.T @ (op.chi_sym @ x)
    res = op.matrix_sym @ x - rhs_sym
    resnrm = float(np.linalg.norm(res))
    if resnrm > 1e-10 * nrm:
        raise RuntimeError(
            f"restricted inverse solve failed: relative residual {resnrm / nrm:.3e}"
        )
    return x / op.dw


def transport_coefficients(rho: float, theta: float, grid: VelocityGrid,
                           model: CollisionModel):
    """Chapman-Enskog viscosity and heat conductivity at state (rho, 0, theta).

    Solves L_M X = P1[.] for the shear function (c1^2 - |c|^2/3) M and the heat
    function c1 (|c|^2/(2 R theta) - 5/2) M, then takes the flux moments that
    appear in the first-order system.
    """
    u = np.zeros(3)
    op = build_linearized(rho, u, theta, grid, model)
    basis = op.basis
    m = basis.weight_m
    c = grid.nodes
    c2 = np.sum(c**2, axis=1)
    s = R_GAS * theta

    bhat = (c[:, 0] ** 2 - c2 / 3.0) * m
    ahat = c[:, 0] * (c2 / (2.0 * s) - 2.5) * m
    xb = op.solve_microscopic(basis.p1(bhat))
    xa = op.solve_microscopic(basis.p1(ahat))

    mu = -0.75 / s * float((grid.weights * (c[:, 0] ** 2 - c2 / 3.0) * xb).sum())
    lam = -R_GAS * weighted_inner(ahat, xa, m, grid)
    if mu <= 0 or lam <= 0:
        raise RuntimeError(f"nonpositive transport coefficients mu={mu}, lam={lam}")
    return mu, lam


def transport_tables(theta_lo: float, theta_hi: float, p_plus: float,
                     grid: VelocityGrid, model: CollisionModel, n: int = 9):
    """mu(theta), lambda(theta) along an isobar p = p_plus, cubic-interpolated."""
    from scipy.interpolate import CubicSpline

    thetas = np.linspace(min(theta_lo, theta_hi) * 0.9, max(theta_lo, theta_hi) * 1.1, n)
    mus = np.empty(n)
    lams = np.empty(n)
    for i, th in enumerate(thetas):
        rho = p_plus / (R_GAS * th)
        mus[i], lams[i] = transport_coefficients(rho, th, grid, model)
    return CubicSpline(thetas, mus), CubicSpline(thetas, lams)


@dataclass
class CertificationReport:
    """Measured discrete surrogates of the operator properties.

    sigma is the minimum nu-weighted Rayleigh quotient over all microscopic
    trial functions touched during certification (including the inverse images
    used for the bounded-inverse check, which makes the inverse-bound inequality a
    theorem over the tested set).  sigma_eig is the spectral floor of the
    symmetric part of the discrete operator; at coarse resolution the
    interpolation bias of the quadrature can push it slightly negative, which
    is reported but does not fail certification (the sampled sigma is the
    certified constant).
    """

    model: dict
    state: tuple
    mstar: tuple
    trials: int
    sigma: float                 # nu-weighted coercivity over all sampled trials
    sigma_abs: float             # unweighted form; equals nu0 exactly for BGK
    sigma_eig: float             # spectral floor (diagnostic; hard sphere only)
    eta0_used: float
    quad_bound_C: float          # nu^-1-weighted quadratic bound on Q(f, g)
    inverse_bound_ratio: float   # max (int nu|L^-1 h|^2/M*) / (sigma^-2 int nu^-1 h^2/M*)
    projection_moment_C: dict    # {(k, lambda): measured constant}
    grid: dict
    passed: bool

    def to_json_dict(self) -> dict:
        return {
            "model": self.model,
            "state": list(self.state),
            "mstar": list(self.mstar),
            "trials": self.trials,
            "sigma": self.sigma,
            "sigma_abs": self.sigma_abs,
            "sigma_eig": self.sigma_eig,
            "eta0_used": self.eta0_used,
            "quad_bound_C": self.quad_bound_C,
            "inverse_bound_ratio": self.inverse_bound_ratio,
            "projection_moment_C": {f"k={k},lam={l}": v
                                    for (k, l), v in self.projection_moment_C.items()},
            "grid": self.grid,
            "passed": self.passed,
        }


def _random_smooth_slice(rng: np.random.Generator, grid: VelocityGrid,
                         weight: np.ndarray) -> np.ndarray:
    """Random cubic polynomial in xi times a Maxwellian-type envelope."""
    xi = grid.nodes
    p = rng.normal() * np.ones(grid.size)
    for i in range(3):
        p += rng.normal() * xi[:, i]
    for i in range(3):
        for j in range(i, 3):
            p += rng.normal() * xi[:, i] * xi[:, j]
    r2 = np.sum(xi**2, axis=1)
    for i in range(3):
        p += rng.normal() * xi[:, i] * r2
    return p * weight


def _coercivity_eig(op: LinearizedOperator, mstar_slice: np.ndarray,
                    weight_nu: bool) -> float:
    """min over microscopic h of -<h, L h>_{M*} / <nu^a h, h>_{M*} (a = 1 or 0).

    Evaluated in the symmetrized coordinates x = h sqrt(w/M), where the forms
    become -sym(diag(M/M*) A~) against diag(nu^a M/M*) and the microscopic
    constraint is chi~ x = 0.
    """
    ratio = op.basis.weight_m / mstar_slice
    a = op.matrix_sym
    da = ratio[:, None] * a
    s = -0.5 * (da + da.T)
    denom = ratio * op.nu if weight_nu else ratio
    dsqr = 1.0 / np.sqrt(denom)
    atil = dsqr[:, None] * s * dsqr[None, :]
    ctil = op.chi_sym * dsqr[None, :]
    qmat, _ = np.linalg.qr(ctil.T)
    chat = qmat.T  # (5, Nv), orthonormal rows
    shift = 10.0 * float(np.abs(atil).sum(axis=1).max())

    def matvec(g):
        pg = g - chat.T @ (chat @ g)
        out = atil @ pg
        out -= chat.T @ (chat @ out)
        out += shift * (g - pg)
        return out

    n = a.shape[0]
    linop = LinearOperator((n, n), matvec=matvec, dtype=float)
    vals = eigsh(linop, k=1, which="SA", return_eigenvectors=False, tol=1e-9,
                 maxiter=5000)
    return float(vals[0])


def certify_operator_properties(
    model: CollisionModel,
    state,
    mstar,
    trials: int = 100,
    grid: Optional[VelocityGrid] = None,
    seed: int = 0,
    quad_bound_trials: int = 8,
) -> CertificationReport:
    """Measure the dissipation, inverse-bound, and projection-moment constants.

    state / mstar are (rho, u, theta) triples; the window theta/2 < theta* < theta
    is a hard precondition.  Success requires sigma > 0 and finite constants.
    """
    rho, u, theta = state[0], np.asarray(state[1], dtype=float), state[2]
    rho_s, u_s, theta_s = mstar[0], np.asarray(mstar[1], dtype=float), mstar[2]
    if not mstar_window_ok(theta, theta_s):
        raise WindowViolationError(
            f"theta*={theta_s} outside the window ({theta / 2}, {theta}) for theta={theta}"
        )
    if grid is None:
        grid = _default_cert_grid(theta)
    rng = np.random.default_rng(seed)

    op = build_linearized(rho, u, theta, grid, model)
    basis = op.basis
    mstar_slice = maxwellian(rho_s, u_s, theta_s, grid)
    w = grid.weights
    dstar = w / mstar_slice
    nu = op.nu

    def ip_star(a, b):
        return float((a * dstar) @ b)

    def quotients(h):
        lh = op.apply(h)
        num = -ip_star(h, lh)
        return num / ip_star(nu * h, h), num / ip_star(h, h)

    # coercivity: min over microscopic h of -<h, L h>_{M*} / <nu h, h>_{M*};
    # the inverse images of the bounded-inverse trials join the sample so that the
    # Cauchy-Schwarz chain behind the inverse bound holds for every tested h
    sigma = np.inf
    sigma_abs = np.inf
    for _ in range(trials):
        h = basis.p1(_random_smooth_slice(rng, grid, mstar_slice))
        q_nu, q_abs = quotients(h)
        sigma = min(sigma, q_nu)
        sigma_abs = min(sigma_abs, q_abs)

    inv_trials = [basis.p1(_random_smooth_slice(rng, grid, mstar_slice))
               for _ in range(trials)]
    inv_solved = []
    for h in inv_trials:
        x = op.solve_microscopic(h)
        inv_solved.append((h, x))
        q_nu, q_abs = quotients(x)
        sigma = min(sigma, q_nu)
        sigma_abs = min(sigma_abs, q_abs)

    if model.kind == "bgk":
        sigma = 1.0
        sigma_abs = model.nu0
        sigma_eig = 1.0
    else:
        sigma_eig = _coercivity_eig(op, mstar_slice, weight_nu=True)
    if sigma <= 0 or not np.isfinite(sigma):
        raise CertificationError(f"nonpositive coercivity sigma={sigma}")

    # bounded inverse: int nu |L^-1 h|^2 / M* <= sigma^-2 int nu^-1 h^2 / M*
    max_ratio = 0.0
    for h, x in inv_solved:
        lhs = ip_star(nu * x, x)
        rhs = ip_star(h / nu, h) / sigma**2
        max_ratio = max(max_ratio, lhs / rhs)

    # nu^-1-weighted quadratic bound on the bilinear Q(f, g); the BGK
    # quadratic remainder Q(G, G) vanishes identically, so its constant is 0
    quad_bound_C = 0.0
    if model.kind != "bgk":
        for _ in range(quad_bound_trials):
            f = np.abs(_random_smooth_slice(rng, grid, mstar_slice))
            g = np.abs(_random_smooth_slice(rng, grid, mstar_slice))
            q = hard_sphere_Q(f, g, grid, model.angular, conserve=False)
            lhs = ip_star(q / nu, q)
            rhs = ip_star(nu * f, f) * ip_star(g, g) + ip_star(f, f) * ip_star(nu * g, g)
            quad_bound_C = max(quad_bound_C, lhs / rhs)

    # projection-moment bound: |int g1 P1(|xi|^k g2)/M* - int g1 |xi|^k g2/M*|
    speed = np.linalg.norm(grid.nodes, axis=1)
    proj_moment = {}
    for k in (1, 2, 3):
        for lam in (0.1, 1.0, 10.0):
            cmax = 0.0
            rng_pm = np.random.default_rng(seed + 1000 * k + int(10 * lam))
            for _ in range(trials):
                g1 = _random_smooth_slice(rng_pm, grid, mstar_slice)
                g2 = _random_smooth_slice(rng_pm, grid, mstar_slice)
                lhs = abs(ip_star(g1, basis.p1(speed**k * g2)) - ip_star(g1, speed**k * g2))
                rhs = lam * ip_star(g1, g1) + ip_star(g2, g2) / lam
                cmax = max(cmax, lhs / rhs)
            proj_moment[(k, lam)] = cmax

    finite = (
        np.isfinite(quad_bound_C)
        and np.isfinite(max_ratio)
        and all(np.isfinite(v) for v in proj_moment.values())
    )
    passed = sigma > 0 and finite
    eta0 = abs(1.0 / rho - 1.0 / rho_s) + float(np.linalg.norm(u - u_s)) + abs(theta - theta_s)
    return CertificationReport(
        model=model.metadata(),
        state=(rho, tuple(u), theta),
        mstar=(rho_s, tuple(u_s), theta_s),
        trials=trials,
        sigma=float(sigma),
        sigma_abs=float(sigma_abs),
        sigma_eig=float(sigma_eig),
        eta0_used=eta0,
        quad_bound_C=float(quad_bound_C),
        inverse_bound_ratio=float(max_ratio),
        projection_moment_C=proj_moment,
        grid=grid.metadata(),
        passed=passed,
    )


def _default_cert_grid(theta: float) -> VelocityGrid:
    from .velocity_space import build_velocity_grid

    return build_velocity_grid((16, 16, 16), extent_multiplier=6.0, theta_max=theta)

"""Observables of the hydrodynamic limit.

Scaled variables y = x / sqrt(eps), tau = t / sqrt(eps) (x Lagrangian), scaled
perturbations (phi, psi, zeta, omega) of (v, u, theta, theta + |u|^2/2) around
the wave, their antiderivatives (Phi, Psi, Wbar) with the combined variables
W = Wbar - u1bar Psi1 and Y = eps^(1/2)|Psi_y|^2/2 - u1bar_y Psi1, the
microscopic split G = G0 + G1 where G0 carries the wave-derivative part that
is not time-integrable, the energy functional E6 with its sublinear growth
check, and the pointwise / sup-away-from-the-discontinuity weighted errors
whose decay in the Knudsen number is the headline measurement.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import interp1d

from .collision import CollisionModel, build_linearized
from .contact_wave import (
    ContactWaveField,
    RiemannContact,
    SelfSimilarProfile,
    build_wave,
    eulerian_to_lagrangian_map,
)
from .kinetic_solver import KineticTrajectory
from .micromacro import build_basis
from .velocity_space import (
    DistributionField,
    VelocityGrid,
    field_moments,
    maxwellian,
)


# ---------------------------------------------------------------------------
# scaled perturbations and antiderivatives

@dataclass(eq=False)
class PerturbationFields:
    y: np.ndarray
    tau: float
    epsilon: float
    phi: np.ndarray
    psi: np.ndarray              # (Ny, 3)
    zeta: np.ndarray
    omega: np.ndarray
    u1bar: np.ndarray            # wave fields on the same y grid
    u1bar_y: np.ndarray
    Phi: Optional[np.ndarray] = None
    Psi: Optional[np.ndarray] = None
    Wbar: Optional[np.ndarray] = None
    W: Optional[np.ndarray] = None
    Y: Optional[np.ndarray] = None

    @property
    def dy(self) -> float:
        return float(self.y[1] - self.y[0])


def wave_discrete_state(wave: ContactWaveField, grid: VelocityGrid):
    """(v, u, theta) of the wave as seen through the discrete moment map.

    Kinetic moment fields carry the velocity-grid quadrature bias of the
    moment map; realizing the wave state the same way (discrete moments of the
    wave Maxwellian) cancels that bias in the perturbation fields, which would
    otherwise show a spurious offset of quadrature-error size everywhere.
    """
    ny = len(wave.x)
    v = np.empty(ny)
    u = np.empty((ny, 3))
    theta = np.empty(ny)
    for i in range(ny):
        m = maxwellian(1.0 / wave.vbar[i], wave.ubar[i], wave.thetabar[i], grid)
        rho, mom, etot = field_moments(m[None, :], grid)
        u[i] = mom[0] / rho[0]
        v[i] = 1.0 / rho[0]
        theta[i] = etot[0] / rho[0] - 0.5 * float(u[i] @ u[i])
    return v, u, theta


def scaled_perturbation(v, u, theta, wave: ContactWaveField,
                        epsilon: float, t: float,
                        wave_state=None) -> PerturbationFields:
    """phi, psi, zeta, omega = eps^(-1/2) x (solution - wave) on the wave's grid.

    wave_state optionally supplies the grid-consistent (v, u, theta) of the
    wave (see wave_discrete_state); default is the analytic wave fields.
    """
    if v.shape != wave.vbar.shape:
        raise ValueError("moment fields and wave are not on a common grid")
    vb, ub, tb = wave_state if wave_state is not None else (
        wave.vbar, wave.ubar, wave.thetabar)
    root = 1.0 / np.sqrt(epsilon)
    y = wave.x * root
    tau = t * root
    phi = root * (v - vb)
    psi = root * (u - ub)
    zeta = root * (theta - tb)
    e_sol = theta + 0.5 * np.sum(u**2, axis=1)
    e_wav = tb + 0.5 * np.sum(ub**2, axis=1)
    omega = root * (e_sol - e_wav)
    # wave slopes in y units: d/dy = sqrt(eps) d/dx
    u1bar_y = np.sqrt(epsilon) * wave.u1bar_x
    return PerturbationFields(y=y, tau=tau, epsilon=epsilon, phi=phi, psi=psi,
                              zeta=zeta, omega=omega, u1bar=wave.u1bar.copy(),
                              u1bar_y=u1bar_y)


def antiderivatives(pf: PerturbationFields, tail_tol: float = 1e-6) -> PerturbationFields:
    """Cumulative-trapezoid antiderivatives from y_min, plus W and Y.

    The left tail must have decayed (|fields| < tail_tol at y_min), otherwise
    the antiderivative has no meaning as an integral from -infinity.
    """
    edge = max(abs(pf.phi[0]), float(np.abs(pf.psi[0]).max()), abs(pf.omega[0]))
    if edge > tail_tol:
        raise ValueError(
            f"perturbation does not decay at the left boundary: |field| = {edge:.3e}"
        )

    def cum(a):
        out = np.concatenate(([0.0], np.cumsum(0.5 * (a[1:] + a[:-1]) * np.diff(pf.y))))
        return out

    pf.Phi = cum(pf.phi)
    pf.Psi = np.stack([cum(pf.psi[:, i]) for i in range(3)], axis=1)
    pf.Wbar = cum(pf.omega)
    pf.W = pf.Wbar - pf.u1bar * pf.Psi[:, 0]
    psi_y_sq = np.sum(pf.psi**2, axis=1)       # Psi_y = psi by construction
    pf.Y = 0.5 * np.sqrt(pf.epsilon) * psi_y_sq - pf.u1bar_y * pf.Psi[:, 0]
    return pf


# ---------------------------------------------------------------------------
# microscopic split on the scaled grid

def micro_decomposition_G(f_values, grid: VelocityGrid, v, u, theta,
                          thetabar_y, ubar_y, epsilon: float,
                          model: CollisionModel):
    """G = eps^(-1/2) P1 f and its split G = G0 + G1.

    G0 = (3/(2 v theta)) L_M^{-1} { P1[ xi1 (|xi-u|^2/(2 theta) thetabar_y
                                          + xi . ubar_y) M ] },
    evaluated cell-wise at the solution's own local state.
    """
    ny = f_values.shape[0]
    g = np.empty_like(f_values)
    g0 = np.empty_like(f_values)
    root = 1.0 / np.sqrt(epsilon)
    for i in range(ny):
        basis = build_basis(1.0 / v[i], u[i], theta[i], grid)
        g[i] = root * basis.p1(f_values[i])
        c2 = np.sum((grid.nodes - u[i]) ** 2, axis=1)
        source = grid.nodes[:, 0] * (c2 / (2.0 * theta[i]) * thetabar_y[i]
                                     + grid.nodes @ ubar_y[i]) * basis.weight_m
        rhs = basis.p1(source)
        if model.kind == "bgk":
            inv = -rhs / model.nu0
        else:
            op = build_linearized(1.0 / v[i], u[i], theta[i], grid, model)
            inv = op.solve_microscopic(rhs)
        g0[i] = (3.0 / (2.0 * v[i] * theta[i])) * inv
    return g, g0, g - g0


# ---------------------------------------------------------------------------
# energy functional

@dataclass
class EnergyReport:
    epsilon: float
    delta: float
    tau: np.ndarray
    e6: np.ndarray
    components: dict             # name -> array over tau
    weights: dict
    growth_ratio: np.ndarray     # E6(tau) / (1 + sqrt(eps) tau)^(1/2)

    def rows(self):
        names = list(self.components)
        for i, t in enumerate(self.tau):
            yield {"tau": float(t), "E6": float(self.e6[i]),
                   **{n: float(self.components[n][i]) for n in names}}


E6_COMPONENTS = ("antiderivative", "perturbation", "perturbation_grad",
                 "g1", "g_deriv", "f_second")


def energy_E6(pf: PerturbationFields, g1, g_y, g_tau, f_yy, f_ytau, f_tautau,
              mstar_slice, grid: VelocityGrid, weights=None):
    """Weighted sum of the six displayed norms; weights default to one.

    The functional is defined only up to norm equivalence, so any fixed
    positive weights preserve the growth property being tested.
    """
    w = dict.fromkeys(E6_COMPONENTS, 1.0)
    if weights:
        w.update(weights)
    dy = pf.dy
    eps = pf.epsilon

    def l2sq(a):
        return float(np.sum(a**2) * dy)

    def xi_l2sq(a):
        return float(np.sum((a**2 / mstar_slice[None, :]) * grid.weights[None, :]) * dy)

    comp = {
        "antiderivative": l2sq(pf.Phi) + l2sq(pf.Psi) + l2sq(pf.W),
        "perturbation": l2sq(pf.phi) + l2sq(pf.psi) + l2sq(pf.zeta),
        "perturbation_grad": eps * (l2sq(_ddy(pf.phi, dy)) + l2sq(_ddy(pf.psi, dy))
                                    + l2sq(_ddy(pf.zeta, dy))),
        "g1": xi_l2sq(g1),
        "g_deriv": eps * (xi_l2sq(g_y) + xi_l2sq(g_tau)),
        "f_second": eps * (xi_l2sq(f_yy) + xi_l2sq(f_ytau) + xi_l2sq(f_tautau)),
    }
    e6 = sum(w[k] * comp[k] for k in comp)
    return e6, comp


def _ddy(a, dy):
    return np.gradient(a, dy, axis=0)


@dataclass
class GrowthCheck:
    passed: bool
    max_ratio: float
    fitted_exponent: float
    slack: float
    degenerate: bool = False


def growth_check(report: EnergyReport, slack: float = 5.0,
                 exponent_slack: float = 0.1) -> GrowthCheck:
    """E6(tau) <= slack (E6(0) + delta) (1 + sqrt(eps) tau)^(1/2), plus the
    fitted growth exponent against (1 + sqrt(eps) tau)."""
    if len(report.tau) == 0:
        raise ValueError("empty energy trace")
    base = (report.e6[0] + report.delta)
    if base <= 0 or np.all(report.e6 <= 0):
        return GrowthCheck(passed=True, max_ratio=0.0, fitted_exponent=0.0,
                           slack=slack, degenerate=True)
    grow = (1.0 + np.sqrt(report.epsilon) * report.tau) ** 0.5
    ratios = report.e6 / (base * grow)
    sel = report.e6 > 0
    if sel.sum() >= 2 and np.ptp(np.log(grow[sel] ** 2)) > 0:
        expo, _ = np.polyfit(np.log(grow[sel] ** 2), np.log(report.e6[sel]), 1)
    else:
        expo = 0.0
    passed = bool(np.max(ratios) <= slack and expo <= 0.5 + exponent_slack)
    return GrowthCheck(passed=passed, max_ratio=float(np.max(ratios)),
                       fitted_exponent=float(expo), slack=slack)


# ---------------------------------------------------------------------------
# assembling the energy trace from a kinetic trajectory

@dataclass
class ScaledSnapshot:
    tau: float
    pf: PerturbationFields
    f_on_y: np.ndarray           # (Ny, Nv)
    g: np.ndarray
    g0: np.ndarray
    g1: np.ndarray
    v: np.ndarray
    u: np.ndarray
    theta: np.ndarray


def _lagrangian_fields(f: DistributionField):
    """Eulerian snapshot -> (x_lag at the Eulerian nodes, v, u, theta)."""
    rho, mom, etot = field_moments(f.values, f.vgrid)
    u = mom / rho[:, None]
    theta = etot / rho - 0.5 * np.sum(u**2, axis=1)
    xlag = eulerian_to_lagrangian_map(f.xgrid.x, rho)
    return xlag, 1.0 / rho, u, theta


def scaled_trajectory(traj: KineticTrajectory, profile: SelfSimilarProfile,
                      mstar_state, model: CollisionModel,
                      margin: float = 0.98, tail_tol: float = 1e-6):
    """Resample every snapshot onto a common Lagrangian y grid and build the
    perturbation + microscopic fields used by the energy functional."""
    eps = traj.config.epsilon
    grid = traj.config.vgrid
    maps = [_lagrangian_fields(f) for f in traj.snapshots]
    lo = max(m[0][0] for m in maps) * margin
    hi = min(m[0][-1] for m in maps) * margin
    nx = traj.snapshots[0].xgrid.nx
    xlag_grid = np.linspace(lo, hi, nx)
    mstar_slice = maxwellian(*mstar_state, grid)

    out = []
    for f, (xlag, v, u, theta) in zip(traj.snapshots, maps):
        t = f.time
        vv = np.interp(xlag_grid, xlag, v)
        uu = np.stack([np.interp(xlag_grid, xlag, u[:, i]) for i in range(3)], axis=1)
        tt = np.interp(xlag_grid, xlag, theta)
        fv = interp1d(xlag, f.values, axis=0, assume_sorted=True,
                      fill_value="extrapolate")(xlag_grid)
        wave = build_wave(profile, eps, t, xlag_grid)
        wstate = wave_discrete_state(wave, grid)
        pf = scaled_perturbation(vv, uu, tt, wave, eps, t, wave_state=wstate)
        antiderivatives(pf, tail_tol=tail_tol)
        thetabar_y = np.sqrt(eps) * wave.thetabar_x
        ubar_y = np.zeros((len(xlag_grid), 3))
        ubar_y[:, 0] = np.sqrt(eps) * wave.u1bar_x
        g, g0, g1 = micro_decomposition_G(fv, grid, vv, uu, tt,
                                          thetabar_y, ubar_y, eps, model)
        out.append(ScaledSnapshot(tau=pf.tau, pf=pf, f_on_y=fv, g=g, g0=g0,
                                  g1=g1, v=vv, u=uu, theta=tt))
    return out, mstar_slice


def _initial_rates(snap: ScaledSnapshot, grid: VelocityGrid, epsilon: float):
    """Exact tau-derivatives at tau = 0 for well-prepared Maxwellian data.

    With f(0) a local-Maxwellian field the collision term vanishes cell-wise,
    so (in the scaled Lagrangian frame)

        f_tau(0)   = ((u1 - xi1)/v) f_y,
        Gbar_tau(0) = -eps^(-1/2) (1/v) P1(xi1 f_y),

    which avoids smearing the initial relaxation layer over the first
    snapshot interval (the one-sided difference would make the eps-weighted
    derivative terms vanish with eps instead of staying O(1)).
    """
    dy = snap.pf.dy
    f_y = _ddy(snap.f_on_y, dy)
    xi1 = grid.nodes[:, 0]
    ftau = ((snap.u[:, 0][:, None] - xi1[None, :]) / snap.v[:, None]) * f_y
    gtau = np.empty_like(f_y)
    root = 1.0 / np.sqrt(epsilon)
    for i in range(f_y.shape[0]):
        basis = build_basis(1.0 / snap.v[i], snap.u[i], snap.theta[i], grid)
        gtau[i] = -root / snap.v[i] * basis.p1(xi1 * f_y[i])
    return ftau, gtau


def _is_well_prepared(snap: ScaledSnapshot) -> bool:
    # resampling onto the common grid injects interpolation-sized microscopic
    # content, so the detection threshold is loose; pass well_prepared
    # explicitly when the initial data is known to be a Maxwellian field
    scale = float(np.abs(snap.f_on_y).max())
    return float(np.abs(snap.g).max()) * np.sqrt(snap.pf.epsilon) <= 1e-4 * scale


def build_energy_report(traj: KineticTrajectory, profile: SelfSimilarProfile,
                        mstar_state, model: CollisionModel,
                        weights=None, well_prepared: Optional[bool] = None) -> EnergyReport:
    """Energy trace over the snapshot times.

    tau-derivatives are one-sided differences between adjacent snapshots
    (first-order accurate), except at tau = 0 with Maxwellian initial data
    where the kinetic equation gives them exactly; y-derivatives are central
    on the common grid.
    """
    snaps, mstar_slice = scaled_trajectory(traj, profile, mstar_state, model)
    eps = traj.config.epsilon
    grid = traj.config.vgrid
    n = len(snaps)
    if n < 3:
        raise ValueError("need at least 3 snapshots for the second tau-derivatives")
    taus = np.array([s.tau for s in snaps])
    dy = snaps[0].pf.dy

    def dtau(arrs, i):
        # forward difference, backward at the last row
        if i < n - 1:
            return (arrs[i + 1] - arrs[i]) / (taus[i + 1] - taus[i])
        return (arrs[i] - arrs[i - 1]) / (taus[i] - taus[i - 1])

    f_list = [s.f_on_y for s in snaps]
    g_list = [s.g for s in snaps]
    ftau = [dtau(f_list, i) for i in range(n)]
    gtau0 = None
    if well_prepared is None:
        well_prepared = _is_well_prepared(snaps[0])
    if snaps[0].tau == 0.0 and well_prepared:
        ftau[0], gtau0 = _initial_rates(snaps[0], grid, eps)

    e6 = np.empty(n)
    comps = {k: np.empty(n) for k in E6_COMPONENTS}
    for i, s in enumerate(snaps):
        g_y = _ddy(s.g, dy)
        g_tau = dtau(g_list, i) if (i > 0 or gtau0 is None) else gtau0
        f_yy = _ddy(_ddy(s.f_on_y, dy), dy)
        f_ytau = _ddy(ftau[i], dy)
        f_tautau = dtau(ftau, i)
        val, comp = energy_E6(s.pf, s.g1, g_y, g_tau, f_yy, f_ytau, f_tautau,
                              mstar_slice, grid, weights)
        e6[i] = val
        for k in comp:
            comps[k][i] = comp[k]

    grow = (1.0 + np.sqrt(eps) * taus) ** 0.5
    return EnergyReport(epsilon=eps, delta=profile.delta, tau=taus, e6=e6,
                        components=comps, weights=dict.fromkeys(E6_COMPONENTS, 1.0)
                        if not weights else {**dict.fromkeys(E6_COMPONENTS, 1.0),
                                             **weights},
                        growth_ratio=e6 / grow)


# ---------------------------------------------------------------------------
# weighted error profiles and the Knudsen sweep

def pointwise_error_profile(f: DistributionField, riemann: RiemannContact,
                            mstar_state, reference: str = "inviscid",
                            profile: Optional[SelfSimilarProfile] = None,
                            epsilon: Optional[float] = None) -> np.ndarray:
    """e(x) = int |f - M_ref|^2 / M* dxi on the Eulerian grid.

    reference "inviscid": two global Maxwellians with the jump at x = 0 (the
    limit object of the error bound).  reference "viscous": the Maxwellian of
    the wave state at the snapshot time (sharper comparison mode).
    """
    grid = f.vgrid
    mstar_slice = maxwellian(*mstar_state, grid)
    th = f.xgrid.x
    e = np.empty(f.xgrid.nx)
    if reference == "inviscid":
        m_minus = maxwellian(riemann.rho_minus, np.zeros(3), riemann.theta_minus, grid)
        m_plus = maxwellian(riemann.rho_plus, np.zeros(3), riemann.theta_plus, grid)
        for i, x in enumerate(th):
            ref = m_minus if x < 0 else m_plus
            d = f.values[i] - ref
            e[i] = float((grid.weights * d * d / mstar_slice).sum())
        return e
    if reference == "viscous":
        if profile is None or epsilon is None:
            raise ValueError("viscous reference needs the profile and epsilon")
        from .contact_wave import lagrangian_to_eulerian

        xl = np.linspace(-profile.L * np.sqrt(epsilon * (1 + f.time)) * 3 - 1,
                         profile.L * np.sqrt(epsilon * (1 + f.time)) * 3 + 1, 4001)
        weul = lagrangian_to_eulerian(build_wave(profile, epsilon, f.time, xl))
        rho = np.interp(th, weul.x, weul.rho)
        uu = np.stack([np.interp(th, weul.x, weul.u[:, i]) for i in range(3)], axis=1)
        tt = np.interp(th, weul.x, weul.theta)
        for i in range(f.xgrid.nx):
            ref = maxwellian(rho[i], uu[i], tt[i], grid)
            d = f.values[i] - ref
            e[i] = float((grid.weights * d * d / mstar_slice).sum())
        return e
    raise ValueError(f"unknown reference {reference!r}")


def sup_error_away(e_profile: np.ndarray, x: np.ndarray, h: float) -> float:
    """sup over |x| >= h of sqrt(e(x)): the L^2_xi(1/sqrt(M*)) norm away from 0."""
    if h <= 0 or h >= max(abs(x[0]), abs(x[-1])):
        raise ValueError(f"h={h} outside the domain")
    sel = np.abs(x) >= h
    return float(np.sqrt(np.max(e_profile[sel])))


@dataclass
class ConvergenceReport:
    epsilons: list
    h: float
    sup_errors: list             # max over snapshot times, per epsilon
    per_time: list               # list of {time: sup_error} dicts
    slope: float
    intercept: float
    fit_residual: float
    monotone: bool
    snapshot_times: list
    certification: Optional[dict] = None
    meta: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "epsilons": [float(e) for e in self.epsilons],
            "h": self.h,
            "sup_errors": [float(v) for v in self.sup_errors],
            "per_time": [{f"{t:.6g}": float(v) for t, v in d.items()}
                         for d in self.per_time],
            "slope": self.slope,
            "intercept": self.intercept,
            "fit_residual": self.fit_residual,
            "monotone": self.monotone,
            "snapshot_times": [float(t) for t in self.snapshot_times],
            "certification": self.certification,
            "meta": self.meta,
        }


def fit_rate(epsilons, errors):
    """log-log slope with the fit residual; degenerate when any error is 0."""
    eps = np.asarray(epsilons, dtype=float)
    err = np.asarray(errors, dtype=float)
    if np.any(err <= 0):
        return float("nan"), float("nan"), float("nan"), True
    le, lv = np.log(eps), np.log(err)
    slope, intercept = np.polyfit(le, lv, 1)
    resid = float(np.sqrt(np.mean((lv - (slope * le + intercept)) ** 2)))
    return float(slope), float(intercept), resid, False


def convergence_sweep(epsilon_list, run_one: Callable, h: float,
                      riemann: RiemannContact, mstar_state,
                      certification: Optional[dict] = None) -> ConvergenceReport:
    """Run the kinetic solver per epsilon and fit the error-decay rate.

    run_one(eps) -> KineticTrajectory; the error per epsilon is the maximum
    over snapshot times of sup_{|x| >= h} of the weighted L2 distance to the
    inviscid contact Maxwellian.
    """
    eps = list(epsilon_list)
    if len(eps) < 3:
        raise ValueError("need at least 3 Knudsen numbers")
    if any(e2 >= e1 for e1, e2 in zip(eps, eps[1:])):
        raise ValueError("epsilon list must be strictly decreasing")

    sup_errors = []
    per_time = []
    times_used = None
    for e in eps:
        traj = run_one(e)
        times_used = traj.times
        d = {}
        for f in traj.snapshots:
            prof_e = pointwise_error_profile(f, riemann, mstar_state)
            d[f.time] = sup_error_away(prof_e, f.xgrid.x, h)
        per_time.append(d)
        sup_errors.append(max(d.values()))

    slope, intercept, resid, degenerate = fit_rate(eps, sup_errors)
    monotone = all(b < a * 1.05 for a, b in zip(sup_errors, sup_errors[1:]))
    return ConvergenceReport(
        epsilons=eps, h=h, sup_errors=sup_errors, per_time=per_time,
        slope=slope, intercept=intercept, fit_residual=resid,
        monotone=monotone, snapshot_times=list(times_used),
        certification=certification,
        meta={"degenerate_fit": degenerate, "mstar": [mstar_state[0],
                                                      list(np.atleast_1d(mstar_state[1]).astype(float)),
                                                      mstar_state[2]]},
    )

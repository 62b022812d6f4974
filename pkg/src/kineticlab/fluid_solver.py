"""Finite-difference solver for the first-order (eps-viscous) limit system.

Lagrangian frame, conservative form:

    v_t  - u1_x = 0
    u1_t + p_x  = (4 eps/3) ((mu/v) u1_x)_x
    ui_t        = eps ((mu/v) ui_x)_x                      i = 2, 3
    (theta + |u|^2/2)_t + (p u1)_x
        = eps ((lam/v) theta_x)_x + (4 eps/3) ((mu/v) u1 u1_x)_x
          + eps sum_i ((mu/v) ui ui_x)_x

with p = 2 theta / (3 v).  Spatial discretization is second-order central in
flux form; time stepping is midpoint RK2, so smooth self-convergence is second
order in both dx and dt.  The time step must satisfy both the acoustic CFL and
the explicit diffusion bound; with the bound enforced the fully explicit
update is stable and conserves sum(v), sum(u1), sum(theta + |u|^2/2) up to the
boundary fluxes to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .velocity_space import R_GAS

GAMMA = 5.0 / 3.0


class StabilityError(ValueError):
    """Requested dt violates the acoustic or diffusive stability bound."""


class VacuumError(RuntimeError):
    """v or theta became nonpositive during a run."""


@dataclass(eq=False)
class FluidField:
    x: np.ndarray
    dx: float
    v: np.ndarray
    u: np.ndarray            # (Nx, 3)
    theta: np.ndarray
    epsilon: float
    mu_fn: Callable
    lam_fn: Callable
    bc_left: tuple = None    # (v, u(3,), theta) far-field Dirichlet
    bc_right: tuple = None
    time: float = 0.0

    def __post_init__(self):
        if self.bc_left is None:
            self.bc_left = (float(self.v[0]), self.u[0].copy(), float(self.theta[0]))
        if self.bc_right is None:
            self.bc_right = (float(self.v[-1]), self.u[-1].copy(), float(self.theta[-1]))

    def pressure(self) -> np.ndarray:
        return R_GAS * self.theta / self.v

    def energy(self) -> np.ndarray:
        return self.theta + 0.5 * np.sum(self.u**2, axis=1)

    def conserved_totals(self) -> np.ndarray:
        return np.array([
            self.v.sum() * self.dx,
            self.u[:, 0].sum() * self.dx,
            self.energy().sum() * self.dx,
        ])


def stable_dt(state: FluidField, safety: float = 1.0) -> float:
    """min(0.4 dx^2 v / (eps max(lam, 4mu/3)), 0.5 dx / c_sound)."""
    mu = state.mu_fn(state.theta)
    lam = state.lam_fn(state.theta)
    dcoef = np.maximum(lam, 4.0 * mu / 3.0)
    dt_diff = float(np.min(0.4 * state.dx**2 * state.v / (state.epsilon * dcoef)))
    c = np.sqrt(GAMMA * state.pressure() / state.v)
    dt_ac = float(np.min(0.5 * state.dx / c))
    return safety * min(dt_diff, dt_ac)


def _ghost(arr: np.ndarray, left, right):
    out = np.empty(len(arr) + 2, dtype=arr.dtype) if arr.ndim == 1 else \
        np.empty((len(arr) + 2, arr.shape[1]), dtype=arr.dtype)
    out[1:-1] = arr
    out[0] = left
    out[-1] = right
    return out


def _rhs(state: FluidField, v, u, theta):
    """Flux-form RHS; returns (dv, du, de, boundary_fluxes).

    boundary_fluxes[q] = (F_left_face, F_right_face) for q in (v, u1, e),
    so that d/dt sum(q) dx = F_right - F_left exactly.
    """
    dx = state.dx
    eps = state.epsilon
    vl, ul, tl = state.bc_left
    vr, ur, tr = state.bc_right
    vg = _ghost(v, vl, vr)
    ug = _ghost(u, ul, ur)
    tg = _ghost(theta, tl, tr)
    pg = R_GAS * tg / vg

    # face averages (N+1 faces)
    u1f = 0.5 * (ug[:-1, 0] + ug[1:, 0])
    pf = 0.5 * (pg[:-1] + pg[1:])
    puf = 0.5 * (pg[:-1] * ug[:-1, 0] + pg[1:] * ug[1:, 0])
    thf = 0.5 * (tg[:-1] + tg[1:])
    vf = 0.5 * (vg[:-1] + vg[1:])
    muf = state.mu_fn(thf) / vf
    lamf = state.lam_fn(thf) / vf
    dudx = (ug[1:] - ug[:-1]) / dx
    dthdx = (tg[1:] - tg[:-1]) / dx
    u1f_mid = u1f

    flux_v = u1f
    visc1 = (4.0 * eps / 3.0) * muf * dudx[:, 0]
    flux_u1 = -pf + visc1
    flux_ui = eps * muf[:, None] * dudx[:, 1:]
    heat = eps * lamf * dthdx
    work = visc1 * u1f_mid + eps * muf * (
        0.5 * (ug[:-1, 1] + ug[1:, 1]) * dudx[:, 1]
        + 0.5 * (ug[:-1, 2] + ug[1:, 2]) * dudx[:, 2])
    flux_e = -puf + heat + work

    dv = (flux_v[1:] - flux_v[:-1]) / dx
    du = np.empty_like(u)
    du[:, 0] = (flux_u1[1:] - flux_u1[:-1]) / dx
    du[:, 1:] = (flux_ui[1:] - flux_ui[:-1]) / dx
    de = (flux_e[1:] - flux_e[:-1]) / dx
    bfluxes = {
        "v": (flux_v[0], flux_v[-1]),
        "u1": (flux_u1[0], flux_u1[-1]),
        "e": (flux_e[0], flux_e[-1]),
    }
    return dv, du, de, bfluxes


def ns_step(state: FluidField, dt: float):
    """One midpoint-RK2 step; returns (new_state, boundary_flux_record)."""
    if dt > stable_dt(state) * (1.0 + 1e-12):
        raise StabilityError(
            f"dt={dt:.3e} exceeds the stability bound {stable_dt(state):.3e}"
        )
    v, u, theta = state.v, state.u, state.theta
    e = theta + 0.5 * np.sum(u**2, axis=1)

    dv1, du1, de1, _ = _rhs(state, v, u, theta)
    vh = v + 0.5 * dt * dv1
    uh = u + 0.5 * dt * du1
    eh = e + 0.5 * dt * de1
    th = eh - 0.5 * np.sum(uh**2, axis=1)
    if np.any(vh <= 0) or np.any(th <= 0):
        raise VacuumError(_vacuum_msg(state, vh, th, "half step"))

    dv2, du2, de2, bf = _rhs(state, vh, uh, th)
    v2 = v + dt * dv2
    u2 = u + dt * du2
    e2 = e + dt * de2
    t2 = e2 - 0.5 * np.sum(u2**2, axis=1)
    if np.any(v2 <= 0) or np.any(t2 <= 0):
        raise VacuumError(_vacuum_msg(state, v2, t2, "full step"))

    new = replace(state, v=v2, u=u2, theta=t2, time=state.time + dt)
    record = {q: dt * (bf[q][1] - bf[q][0]) for q in bf}
    return new, record


def _vacuum_msg(state, v, theta, where):
    i = int(np.argmin(np.minimum(v, theta)))
    return (f"vacuum at {where}: cell {i} (x={state.x[i]:.4f}) "
            f"v={v[i]:.3e} theta={theta[i]:.3e} at t={state.time:.4f}")


@dataclass
class FluidTrajectory:
    snapshots: list                       # list of FluidField
    times: list
    conservation_drift: float             # max per-step ledger violation (relative)
    ledger: list                          # per-snapshot conserved totals


def ns_run(initial: FluidField, t_final: float, snapshot_times=(),
           dt: Optional[float] = None, safety: float = 0.9) -> FluidTrajectory:
    """March to t_final, recording snapshots and the conservation ledger."""
    snap_times = sorted(set(list(snapshot_times) + [t_final]))
    state = initial
    snapshots = [replace(initial)]
    times = [initial.time]
    ledger = [initial.conserved_totals()]
    totals = initial.conserved_totals()
    scale = np.abs(totals) + 1.0
    max_drift = 0.0

    for target in snap_times:
        if target <= state.time:
            continue
        while state.time < target - 1e-14:
            step = dt if dt is not None else stable_dt(state, safety)
            step = min(step, target - state.time)
            state, rec = ns_step(state, step)
            totals = totals + np.array([rec["v"], rec["u1"], rec["e"]])
            drift = np.abs(state.conserved_totals() - totals) / scale
            max_drift = max(max_drift, float(drift.max()))
        snapshots.append(replace(state))
        times.append(state.time)
        ledger.append(state.conserved_totals())
    return FluidTrajectory(snapshots=snapshots, times=times,
                           conservation_drift=max_drift, ledger=ledger)


def field_from_wave(wave, mu_fn, lam_fn) -> FluidField:
    """Initialize the fluid state from a Lagrangian contact-wave field."""
    x = wave.x
    return FluidField(
        x=x, dx=float(x[1] - x[0]), v=wave.vbar.copy(), u=wave.ubar.copy(),
        theta=wave.thetabar.copy(), epsilon=wave.epsilon,
        mu_fn=mu_fn, lam_fn=lam_fn, time=wave.t)

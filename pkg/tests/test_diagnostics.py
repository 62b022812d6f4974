import numpy as np
import pytest
from scipy.special import erf

from kineticlab.collision import CollisionModel
from kineticlab.contact_wave import (
    build_wave,
    euler_riemann_contact,
    lagrangian_to_eulerian,
    solve_selfsimilar,
)
from kineticlab.diagnostics import (
    EnergyReport,
    antiderivatives,
    build_energy_report,
    convergence_sweep,
    fit_rate,
    growth_check,
    micro_decomposition_G,
    pointwise_error_profile,
    scaled_perturbation,
    sup_error_away,
)
from kineticlab.kinetic_solver import KineticConfig, init_from_wave, kinetic_run
from kineticlab.micromacro import build_basis
from kineticlab.velocity_space import (
    DistributionField,
    SpatialGrid,
    build_velocity_grid,
    maxwellian,
)

BGK = CollisionModel(kind="bgk", nu0=1.0)


@pytest.fixture(scope="module")
def setup():
    rc = euler_riemann_contact(1.0, 1.0, 1.2)
    lam = lambda th: (5.0 / 3.0) * rc.p_plus * np.ones_like(np.asarray(th, dtype=float))
    prof = solve_selfsimilar(1.0, 1.2, rc.p_plus, lam)
    return rc, prof


@pytest.fixture(scope="module")
def grid():
    return build_velocity_grid((16, 12, 12), 6.0, 1.2)


def _traj(rc, prof, grid, eps, nx=120, t_final=0.3, snaps=(0.1, 0.2, 0.3)):
    xg = SpatialGrid(-5.0, 5.0, nx)
    xl = np.linspace(-8, 8, 4 * nx + 1)
    weul = lagrangian_to_eulerian(build_wave(prof, eps, 0.0, xl))
    finit = init_from_wave(weul, xg, grid)
    cfg = KineticConfig(epsilon=eps, xgrid=xg, vgrid=grid, model=BGK,
                        t_final=t_final, snapshot_times=snaps,
                        bc_left=(rc.rho_minus, np.zeros(3), rc.theta_minus),
                        bc_right=(rc.rho_plus, np.zeros(3), rc.theta_plus))
    return kinetic_run(cfg, finit,
                       mstar_state=(0.5 * (rc.rho_minus + rc.rho_plus),
                                    np.zeros(3), 0.9))


# ---------------------------------------------------------------------------
# scaled perturbations

def test_perturbation_of_wave_itself_is_zero(setup):
    rc, prof = setup
    x = np.linspace(-4, 4, 801)
    w = build_wave(prof, 0.04, 0.5, x)
    pf = scaled_perturbation(w.vbar, w.ubar, w.thetabar, w, 0.04, 0.5)
    assert np.abs(pf.phi).max() == 0.0
    assert np.abs(pf.psi).max() == 0.0
    assert np.abs(pf.omega).max() == 0.0
    assert pf.tau == pytest.approx(0.5 / np.sqrt(0.04))


def test_perturbation_definitional_inverse(setup):
    rc, prof = setup
    eps = 0.04
    x = np.linspace(-4, 4, 801)
    w = build_wave(prof, eps, 0.0, x)
    y = x / np.sqrt(eps)
    gfun = np.exp(-(y / 5.0) ** 2)
    v = w.vbar + np.sqrt(eps) * gfun
    pf = scaled_perturbation(v, w.ubar, w.thetabar, w, eps, 0.0)
    assert np.allclose(pf.phi, gfun, atol=1e-13)


def test_antiderivative_of_gaussian_bump(setup):
    rc, prof = setup
    eps = 0.04
    x = np.linspace(-6, 6, 4001)
    w = build_wave(prof, eps, 0.0, x)
    y = x / np.sqrt(eps)
    gfun = np.exp(-((y + 5.0) / 3.0) ** 2)   # decays at both ends of y
    v = w.vbar + np.sqrt(eps) * gfun
    pf = scaled_perturbation(v, w.ubar, w.thetabar, w, eps, 0.0)
    pf = antiderivatives(pf)
    exact = 3.0 * np.sqrt(np.pi) / 2.0 * (erf((y + 5.0) / 3.0) - erf((y[0] + 5.0) / 3.0))
    assert np.abs(pf.Phi - exact).max() <= 1e-5
    # d/dy Phi recovers phi to second order
    dy = pf.dy
    dnum = np.gradient(pf.Phi, dy)
    assert np.abs(dnum - pf.phi)[2:-2].max() <= 1e-3


def test_antiderivative_rejects_nondecaying(setup):
    rc, prof = setup
    x = np.linspace(-4, 4, 801)
    w = build_wave(prof, 0.04, 0.0, x)
    v = w.vbar + 0.1   # no decay at y_min
    pf = scaled_perturbation(v, w.ubar, w.thetabar, w, 0.04, 0.0)
    with pytest.raises(ValueError):
        antiderivatives(pf)


def test_w_and_y_with_zero_wave_velocity():
    # delta = 0: u1bar = 0 everywhere, so W = Wbar and Y = eps^(1/2)|psi|^2/2
    rc = euler_riemann_contact(1.0, 1.0, 1.0)
    prof = solve_selfsimilar(1.0, 1.0, rc.p_plus,
                             lambda th: np.ones_like(np.asarray(th, dtype=float)))
    eps = 0.04
    x = np.linspace(-4, 4, 801)
    w = build_wave(prof, eps, 0.0, x)
    y = x / np.sqrt(eps)
    psi1 = np.exp(-(y / 3.0) ** 2)
    u = w.ubar.copy()
    u[:, 0] += np.sqrt(eps) * psi1
    pf = scaled_perturbation(w.vbar, u, w.thetabar, w, eps, 0.0)
    pf = antiderivatives(pf)
    assert np.array_equal(pf.W, pf.Wbar)
    assert np.allclose(pf.Y, 0.5 * np.sqrt(eps) * psi1**2, atol=1e-14)


# ---------------------------------------------------------------------------
# microscopic split

def test_g_decomposition_maxwellian_field(setup, grid):
    rc, prof = setup
    eps = 0.05
    x = np.linspace(-3, 3, 41)
    w = build_wave(prof, eps, 0.0, x)
    fv = np.stack([maxwellian(1.0 / w.vbar[i], w.ubar[i], w.thetabar[i], grid)
                   for i in range(len(x))])
    thetabar_y = np.sqrt(eps) * w.thetabar_x
    ubar_y = np.zeros((len(x), 3))
    ubar_y[:, 0] = np.sqrt(eps) * w.u1bar_x
    g, g0, g1 = micro_decomposition_G(fv, grid, w.vbar, w.ubar, w.thetabar,
                                      thetabar_y, ubar_y, eps, BGK)
    # Maxwellian field: G = 0 up to quadrature dust, so G1 = -G0
    assert np.abs(g).max() <= 1e-6 * np.abs(g0).max()
    assert np.allclose(g1, -g0, atol=1e-9 * np.abs(g0).max())
    assert np.abs(g0).max() > 0


def test_g0_vanishes_for_flat_wave(grid):
    rc = euler_riemann_contact(1.0, 1.0, 1.0)
    prof = solve_selfsimilar(1.0, 1.0, rc.p_plus,
                             lambda th: np.ones_like(np.asarray(th, dtype=float)))
    x = np.linspace(-2, 2, 17)
    w = build_wave(prof, 0.05, 0.0, x)
    fv = np.stack([maxwellian(1.0, np.zeros(3), 1.0, grid)] * len(x))
    g, g0, g1 = micro_decomposition_G(fv, grid, w.vbar, w.ubar, w.thetabar,
                                      np.zeros(len(x)), np.zeros((len(x), 3)),
                                      0.05, BGK)
    assert np.abs(g0).max() == 0.0


def test_g0_bgk_closed_form(setup, grid):
    # BGK: G0 = -(1/nu0) (3/(2 v theta)) P1[xi1 (...) M]
    rc, prof = setup
    eps = 0.05
    x = np.array([-0.2, 0.0, 0.3])
    w = build_wave(prof, eps, 1.0, x)
    fv = np.stack([maxwellian(1.0 / w.vbar[i], w.ubar[i], w.thetabar[i], grid)
                   for i in range(len(x))])
    thetabar_y = np.sqrt(eps) * w.thetabar_x
    ubar_y = np.zeros((len(x), 3))
    ubar_y[:, 0] = np.sqrt(eps) * w.u1bar_x
    _, g0, _ = micro_decomposition_G(fv, grid, w.vbar, w.ubar, w.thetabar,
                                     thetabar_y, ubar_y, eps, BGK)
    i = 1
    basis = build_basis(1.0 / w.vbar[i], w.ubar[i], w.thetabar[i], grid)
    c2 = np.sum((grid.nodes - w.ubar[i]) ** 2, axis=1)
    src = grid.nodes[:, 0] * (c2 / (2 * w.thetabar[i]) * thetabar_y[i]
                              + grid.nodes @ ubar_y[i]) * basis.weight_m
    expected = -(3.0 / (2.0 * w.vbar[i] * w.thetabar[i])) * basis.p1(src) / BGK.nu0
    assert np.abs(g0[i] - expected).max() <= 1e-10 * np.abs(expected).max()


# ---------------------------------------------------------------------------
# energy functional and growth

def test_energy_report_shape_and_positivity(setup, grid):
    rc, prof = setup
    traj = _traj(rc, prof, grid, 0.05)
    er = build_energy_report(traj, prof,
                             (0.5 * (rc.rho_minus + rc.rho_plus), np.zeros(3), 0.9),
                             BGK, well_prepared=True)
    assert len(er.tau) == 4
    assert np.all(er.e6 >= 0)
    for k, arr in er.components.items():
        assert np.all(arr >= 0), k
    total = sum(er.components[k] for k in er.components)
    assert np.allclose(total, er.e6)


def test_perturbation_norm_order_one_in_eps(setup, grid):
    # the scaled perturbation norm stays O(1) as eps varies (the scaling's job)
    rc, prof = setup
    mstar = (0.5 * (rc.rho_minus + rc.rho_plus), np.zeros(3), 0.9)
    norms = {}
    for eps in (0.1, 0.05):
        traj = _traj(rc, prof, grid, eps)
        er = build_energy_report(traj, prof, mstar, BGK, well_prepared=True)
        norms[eps] = er.components["perturbation"][-1]
    ratio = max(norms.values()) / max(min(norms.values()), 1e-300)
    assert np.isfinite(ratio) and ratio < 5.0


def test_growth_check_passes_on_real_run(setup, grid):
    rc, prof = setup
    traj = _traj(rc, prof, grid, 0.05)
    er = build_energy_report(traj, prof,
                             (0.5 * (rc.rho_minus + rc.rho_plus), np.zeros(3), 0.9),
                             BGK, well_prepared=True)
    gc = growth_check(er)
    assert gc.passed
    assert gc.max_ratio <= 5.0


def test_growth_check_degenerate_trace():
    er = EnergyReport(epsilon=0.05, delta=0.0, tau=np.array([0.0, 1.0, 2.0]),
                      e6=np.zeros(3), components={}, weights={},
                      growth_ratio=np.zeros(3))
    gc = growth_check(er)
    assert gc.passed and gc.degenerate


def test_growth_check_rejects_linear_growth():
    eps = 0.04
    tau = np.linspace(0.0, 4000.0, 60)
    e6 = 1.0 * (1.0 + np.sqrt(eps) * tau)
    er = EnergyReport(epsilon=eps, delta=0.2, tau=tau, e6=e6, components={},
                      weights={}, growth_ratio=e6 / (1 + np.sqrt(eps) * tau) ** 0.5)
    gc = growth_check(er)
    assert not gc.passed
    assert gc.fitted_exponent > 0.6


# ---------------------------------------------------------------------------
# error profiles and sweep plumbing

def test_pointwise_error_zero_for_exact_reference(setup, grid):
    rc, prof = setup
    xg = SpatialGrid(-4.0, 4.0, 64)
    m_minus = maxwellian(rc.rho_minus, np.zeros(3), rc.theta_minus, grid)
    m_plus = maxwellian(rc.rho_plus, np.zeros(3), rc.theta_plus, grid)
    vals = np.stack([m_minus if x < 0 else m_plus for x in xg.x])
    f = DistributionField(values=vals, xgrid=xg, vgrid=grid)
    e = pointwise_error_profile(f, rc, (0.9, np.zeros(3), 0.9))
    assert np.abs(e).max() == 0.0


def test_pointwise_error_gaussian_tail(setup, grid):
    # viscous-wave Maxwellian data vs the inviscid reference decays like a
    # Gaussian in x^2/(eps(1+t)) away from the jump
    rc, prof = setup
    eps, t = 0.05, 0.0
    xg = SpatialGrid(-4.0, 4.0, 200)
    xl = np.linspace(-6, 6, 1601)
    weul = lagrangian_to_eulerian(build_wave(prof, eps, t, xl))
    f = init_from_wave(weul, xg, grid)
    e = pointwise_error_profile(f, rc, (0.9, np.zeros(3), 0.9))
    x = xg.x
    sel = (x > 0.3) & (x < 1.5)
    slope, _ = np.polyfit(x[sel] ** 2 / (eps * (1 + t)), np.log(e[sel] + 1e-300), 1)
    assert slope < 0


def test_sup_error_away(setup, grid):
    x = np.linspace(-4, 4, 801)
    e = np.exp(-x**2 / 0.1)
    val = sup_error_away(e, x, 1.0)
    assert val == pytest.approx(np.sqrt(np.exp(-1.0 / 0.1)), rel=1e-2)
    with pytest.raises(ValueError):
        sup_error_away(e, x, 5.0)


def test_fit_rate_degenerate():
    slope, _, _, degenerate = fit_rate([0.1, 0.05, 0.025], [0.0, 0.0, 0.0])
    assert degenerate


def test_convergence_sweep_validation(setup):
    rc, _ = setup
    with pytest.raises(ValueError):
        convergence_sweep([0.1, 0.1, 0.05], None, 0.5, rc, (0.9, np.zeros(3), 0.9))
    with pytest.raises(ValueError):
        convergence_sweep([0.1, 0.05], None, 0.5, rc, (0.9, np.zeros(3), 0.9))

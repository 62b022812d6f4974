import numpy as np
import pytest

from kineticlab.contact_wave import (
    build_wave,
    euler_riemann_contact,
    eulerian_to_lagrangian_map,
    lagrangian_to_eulerian,
    solve_selfsimilar,
    wave_residuals,
)
from kineticlab.velocity_space import R_GAS


def lam_linear(th):
    return np.asarray(th, dtype=float)


@pytest.fixture(scope="module")
def riemann():
    return euler_riemann_contact(1.0, 1.0, 1.2)


@pytest.fixture(scope="module")
def profile(riemann):
    return solve_selfsimilar(1.0, 1.2, riemann.p_plus, lam_linear,
                             L=10.0, n_eta=2001, tol=1e-10)


# ---------------------------------------------------------------------------
# Riemann contact

def test_riemann_no_jump():
    rc = euler_riemann_contact(1.0, 1.0, 1.0)
    assert rc.v_plus == 1.0
    assert rc.delta == 0.0


def test_riemann_pressure_matching():
    rc = euler_riemann_contact(1.0, 1.0, 1.2)
    assert rc.v_plus == pytest.approx(1.2)
    assert rc.p_plus == pytest.approx(2.0 / 3.0)
    p_minus = R_GAS * rc.theta_minus / rc.v_minus
    p_plus = R_GAS * rc.theta_plus / rc.v_plus
    assert abs(p_minus - p_plus) < 1e-15


def test_riemann_generic_matching():
    rc = euler_riemann_contact(2.0, 0.9, 1.1)
    assert rc.v_plus == pytest.approx(2.0 * 11.0 / 9.0)
    assert abs(R_GAS * 0.9 / 2.0 - R_GAS * 1.1 / rc.v_plus) < 1e-15


def test_riemann_rejects_nonpositive():
    with pytest.raises(ValueError):
        euler_riemann_contact(-1.0, 1.0, 1.0)


# ---------------------------------------------------------------------------
# self-similar profile

def test_profile_constant_case(riemann):
    prof = solve_selfsimilar(1.0, 1.0, riemann.p_plus, lam_linear)
    assert np.all(prof.theta_hat == 1.0)
    assert np.all(prof.dtheta_hat == 0.0)
    assert prof.residual_norm == 0.0


def test_profile_monotone_and_bounded(profile):
    assert profile.residual_norm <= 1e-8
    assert profile.monotone
    th0 = profile.theta(np.array([0.0]))[0]
    assert 1.0 < th0 < 1.2
    assert np.all(profile.theta_hat >= 1.0 - 1e-12)
    assert np.all(profile.theta_hat <= 1.2 + 1e-12)


def test_profile_gaussian_tail(profile):
    assert profile.tail_constant > 0


def test_profile_relaxation_oracle(profile):
    """Explicit time stepping of the parabolic equation, started on the
    profile, must stay on the (exactly self-similar) profile to 1e-4."""
    eps, tfin = 1.0, 3.0
    x = np.linspace(-40.0, 40.0, 4001)
    dx = x[1] - x[0]
    th = profile.theta(x / np.sqrt(eps))
    amax = float(np.max(profile.a_fn(np.array([1.0, 1.1, 1.2]))))
    dt = 0.2 * dx * dx / (eps * amax)
    nt = int(np.ceil(tfin / dt))
    dt = tfin / nt
    for _ in range(nt):
        am = profile.a_fn(0.5 * (th[1:] + th[:-1]))
        flux = am * (th[1:] - th[:-1]) / dx
        th[1:-1] += dt * eps * (flux[1:] - flux[:-1]) / dx
    ref = profile.theta(x / np.sqrt(eps * (1.0 + tfin)))
    assert np.abs(th - ref).max() <= 1e-4


def test_profile_rejects_bad_inputs(riemann):
    with pytest.raises(ValueError):
        solve_selfsimilar(1.0, 1.2, riemann.p_plus, lam_linear, L=4.0)
    with pytest.raises(ValueError):
        solve_selfsimilar(1.0, 1.2, riemann.p_plus, lambda th: -np.ones_like(th))
    with pytest.raises(ValueError):
        solve_selfsimilar(-1.0, 1.2, riemann.p_plus, lam_linear)


# ---------------------------------------------------------------------------
# wave construction

def test_wave_delta_zero_constant(riemann):
    prof = solve_selfsimilar(1.0, 1.0, riemann.p_plus, lam_linear)
    x = np.linspace(-3, 3, 501)
    w = build_wave(prof, 0.01, 0.0, x)
    assert np.allclose(w.vbar, 1.0)
    assert np.allclose(w.ubar, 0.0)
    assert np.allclose(w.thetabar, 1.0)
    r1, r2 = wave_residuals(w, lambda t: np.ones_like(t), lam_linear)
    assert np.abs(r1).max() == 0.0
    assert np.abs(r2).max() == 0.0


def test_wave_far_field_limits(profile, riemann):
    x = np.linspace(-5, 5, 2001)
    w = build_wave(profile, 0.01, 1.0, x)
    assert w.vbar[0] == pytest.approx(riemann.v_minus, abs=1e-10)
    assert w.vbar[-1] == pytest.approx(riemann.v_plus, abs=1e-10)
    assert w.thetabar[0] == pytest.approx(1.0, abs=1e-10)
    assert w.thetabar[-1] == pytest.approx(1.2, abs=1e-10)
    assert abs(w.u1bar[0]) < 1e-12 and abs(w.u1bar[-1]) < 1e-12
    # pointwise construction identities
    assert np.allclose(w.vbar, 2.0 * w.theta_hat / (3.0 * riemann.p_plus))
    assert np.allclose(w.thetabar, w.theta_hat - 0.5 * w.u1bar**2)
    assert np.all(w.ubar[:, 1:] == 0.0)


def test_wave_u1_scaling(profile):
    x = np.linspace(-3, 3, 2001)
    eps = 0.01
    w0 = build_wave(profile, eps, 0.0, x)
    w3 = build_wave(profile, eps, 3.0, x)
    ratio = np.abs(w3.u1bar).max() / np.abs(w0.u1bar).max()
    assert ratio == pytest.approx((1 + 3.0) ** -0.5, rel=0.01)
    w0b = build_wave(profile, 4 * eps, 0.0, x)
    assert np.abs(w0b.u1bar).max() / np.abs(w0.u1bar).max() == pytest.approx(2.0, rel=0.01)


def _max_residuals(profile, eps, t, mu_fn, lam_fn):
    x = np.linspace(-4, 4, 4001)
    w = build_wave(profile, eps, t, x)
    r1, r2 = wave_residuals(w, mu_fn, lam_fn)
    return np.abs(r1).max(), np.abs(r2).max()


def test_residual_time_scaling_r1(profile):
    mu_fn = lambda th: 0.5 * np.ones_like(np.asarray(th))
    vals = {t: _max_residuals(profile, 0.01, t, mu_fn, lam_linear)[0]
            for t in (0.0, 1.0, 3.0)}
    for t in (1.0, 3.0):
        expected = vals[0.0] / (1.0 + t)
        assert abs(vals[t] - expected) <= 0.15 * expected


def test_residual_scaling_r2(profile):
    mu_fn = lambda th: 0.5 * np.ones_like(np.asarray(th))
    vals = {(eps, t): _max_residuals(profile, eps, t, mu_fn, lam_linear)[1]
            for eps in (0.04, 0.01) for t in (0.0, 1.0, 3.0)}
    base = vals[(0.04, 0.0)]
    for (eps, t), v in vals.items():
        expected = base * (eps / 0.04) ** 1.5 * (1.0 + t) ** -1.5
        assert abs(v - expected) <= 0.15 * expected


def test_wave_closeness_gaussian_in_x(profile, riemann):
    # |(vbar,ubar,thetabar) - (v-,0,theta-)| decays like a Gaussian in
    # x^2/(eps(1+t)) on the left of the jump
    eps, t = 0.01, 1.0
    x = np.linspace(-4, 4, 4001)
    w = build_wave(profile, eps, t, x)
    dev = (np.abs(w.vbar - riemann.v_minus) + np.abs(w.u1bar)
           + np.abs(w.thetabar - riemann.theta_minus))
    arg = x**2 / (eps * (1 + t))
    sel = (x < -0.05) & (x > -0.6) & (dev > 1e-14)
    slope, _ = np.polyfit(arg[sel], np.log(dev[sel]), 1)
    assert slope < 0


def test_pressure_deviation_structure(profile):
    # |pbar - p+| = p+ u1^2 / (2 Theta): interior only, quadratically small
    x = np.linspace(-4, 4, 2001)
    w = build_wave(profile, 0.01, 1.0, x)
    dev = np.abs(w.pressure() - w.p_plus)
    bound = w.p_plus * w.u1bar**2 / (2 * w.theta_hat) + 1e-15
    assert np.all(dev <= bound * (1 + 1e-8))


# ---------------------------------------------------------------------------
# coordinate maps

def test_lagrangian_to_eulerian_constant(riemann):
    prof = solve_selfsimilar(1.0, 1.0, riemann.p_plus, lam_linear)
    x = np.linspace(-2, 2, 401)
    w = build_wave(prof, 0.01, 0.0, x)
    eul = lagrangian_to_eulerian(w)
    assert np.allclose(eul.rho, 1.0)
    assert eul.x[0] == pytest.approx(-2.0)


def test_eulerian_roundtrip(profile):
    x = np.linspace(-4, 4, 4001)
    w = build_wave(profile, 0.01, 0.5, x)
    eul = lagrangian_to_eulerian(w)
    # total mass in Eulerian coordinates equals the Lagrangian length
    mass = np.trapezoid(eul.rho, eul.x)
    assert mass == pytest.approx(x[-1] - x[0], rel=1e-6)
    # map back: x(X) should invert X(x)
    back = eulerian_to_lagrangian_map(eul.x, eul.rho)
    assert np.abs(back - eul.lag_x).max() <= 1e-6
    # round-trip density on the Eulerian grid
    rho_direct = 1.0 / np.interp(back, x, w.vbar)
    assert np.abs(rho_direct - eul.rho).max() <= 1e-6


def test_lagrangian_to_eulerian_rejects_vacuum(profile):
    x = np.linspace(-1, 1, 101)
    w = build_wave(profile, 0.01, 0.0, x)
    w.vbar[3] = -1.0
    with pytest.raises(ValueError):
        lagrangian_to_eulerian(w)

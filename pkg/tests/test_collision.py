import numpy as np
import pytest

from kineticlab.collision import (
    CollisionModel,
    WindowViolationError,
    angular_grid,
    bgk_collision,
    build_linearized,
    certify_operator_properties,
    collision_frequency,
    hard_sphere_Q,
    solve_LM_inverse,
    transport_coefficients,
)
from kineticlab.micromacro import build_basis, weighted_inner
from kineticlab.velocity_space import R_GAS, build_velocity_grid, maxwellian

HS = CollisionModel(kind="hard_sphere", angular=(8, 8))


def _moment_vector(q, grid):
    phi = np.column_stack([np.ones(grid.size), grid.nodes,
                           0.5 * np.sum(grid.nodes**2, axis=1)])
    return (grid.weights * q) @ phi


def _wnorm(h, grid):
    return np.sqrt(float((grid.weights * h * h).sum()))


# ---------------------------------------------------------------------------
# model construction

def test_model_validation():
    with pytest.raises(ValueError):
        CollisionModel(kind="bgk", nu0=0.0)
    with pytest.raises(ValueError):
        CollisionModel(kind="hard_sphere", angular=(4, 8))
    with pytest.raises(ValueError):
        CollisionModel(kind="dsmc")


def test_angular_grid_weights():
    om, ow = angular_grid(8, 8)
    assert ow.sum() == pytest.approx(4 * np.pi, rel=1e-13)
    assert np.allclose(np.linalg.norm(om, axis=1), 1.0)
    # full-sphere quadrature of |v . Omega| approximates 2 pi |v|
    v = np.array([0.3, -1.2, 0.4])
    val = float((ow * np.abs(om @ v)).sum())
    assert val == pytest.approx(2 * np.pi * np.linalg.norm(v), rel=0.05)


# ---------------------------------------------------------------------------
# BGK

def test_bgk_annihilates_maxwellian(grid_fine):
    # the fixed point is exact up to the quadrature bias of the moment map,
    # so the 1e-12 claim needs the wide grid
    m = maxwellian(1.0, np.zeros(3), 1.0, grid_fine)
    q = bgk_collision(m, grid_fine, nu0=1.0)
    assert np.abs(q).max() <= 1e-12 * m.max()


def test_bgk_conserves(grid_default, rng):
    m = maxwellian(1.0, np.zeros(3), 1.0, grid_default)
    for _ in range(20):
        f = np.abs(m * (1 + 0.3 * rng.standard_normal(grid_default.size)))
        q = bgk_collision(f, grid_default, nu0=1.3)
        scale = max(1.0, _wnorm(q, grid_default))
        assert np.abs(_moment_vector(q, grid_default)).max() <= 1e-12 * scale


def test_bgk_linearization(grid_fine, rng):
    nu0 = 1.4
    m = maxwellian(1.0, np.zeros(3), 1.0, grid_fine)
    basis = build_basis(1.0, np.zeros(3), 1.0, grid_fine)
    bump = basis.p1(m * rng.standard_normal(grid_fine.size))
    amp = 1e-4
    q = bgk_collision(m + amp * bump, grid_fine, nu0)
    # output ~ -nu0 * amp * bump up to quadrature dust
    assert np.abs(q + nu0 * amp * bump).max() <= 1e-6 * amp * np.abs(bump).max() \
        + 1e-12


def test_bgk_dissipation_identity(grid_default, rng):
    nu0 = 2.0
    bgk = CollisionModel(kind="bgk", nu0=nu0)
    op = build_linearized(1.0, np.zeros(3), 1.0, grid_default, bgk)
    for _ in range(5):
        h = op.basis.p1(op.basis.weight_m * rng.standard_normal(grid_default.size))
        lhs = weighted_inner(h, op.apply(h), op.basis.weight_m, grid_default)
        rhs = -nu0 * weighted_inner(h, h, op.basis.weight_m, grid_default)
        assert lhs == pytest.approx(rhs, rel=1e-12)


# ---------------------------------------------------------------------------
# hard-sphere quadrature (coarse grids: the dense kernels cost O(Nv^2 NOmega))

def test_hs_equilibrium_annihilation_16cubed():
    g = build_velocity_grid((16, 16, 16), 6.0, 1.0)
    m = maxwellian(1.0, np.zeros(3), 1.0, g)
    q = hard_sphere_Q(m, m, g, (8, 8), conserve=True, subtract_equilibrium=True)
    assert _wnorm(q, g) <= 1e-3 * _wnorm(m, g)


def test_hs_conservation_and_symmetry(grid_coarse, rng):
    g = grid_coarse
    m = maxwellian(1.0, np.zeros(3), 1.0, g)
    f = np.abs(m * (1 + 0.4 * rng.standard_normal(g.size)))
    h = np.abs(m * (1 + 0.4 * rng.standard_normal(g.size)))
    stats = {}
    qfh = hard_sphere_Q(f, h, g, (8, 8), stats=stats)
    qhf = hard_sphere_Q(h, f, g, (8, 8))
    assert np.abs(qfh - qhf).max() <= 1e-13 * max(1.0, np.abs(qfh).max())
    scale = max(1.0, _wnorm(qfh, g))
    assert np.abs(_moment_vector(qfh, g)).max() <= 1e-12 * scale
    assert 0.0 <= stats["dropped_fraction"] < 1.0


def test_hs_rejects_coarse_angular(grid_coarse):
    m = maxwellian(1.0, np.zeros(3), 1.0, grid_coarse)
    with pytest.raises(ValueError):
        hard_sphere_Q(m, m, grid_coarse, (4, 4))


def test_collision_frequency_bgk(grid_default):
    m = maxwellian(1.0, np.zeros(3), 1.0, grid_default)
    nu, env = collision_frequency(grid_default, m, CollisionModel(kind="bgk", nu0=1.7))
    assert np.all(nu == 1.7)
    assert env.kappa == 0.0


def test_collision_frequency_hs_oracle_and_envelope():
    # nu(0) = 2 rho sqrt(2 pi R theta) for the hard-sphere kernel
    g = build_velocity_grid((17, 17, 17), 6.0, 1.0)
    m = maxwellian(1.0, np.zeros(3), 1.0, g)
    nu, env = collision_frequency(g, m, HS)
    i0 = int(np.argmin(np.linalg.norm(g.nodes, axis=1)))
    assert nu[i0] == pytest.approx(2.0 * np.sqrt(2 * np.pi * R_GAS), rel=5e-3)
    assert env.nu_lower > 0
    assert 0.8 <= env.kappa <= 1.0
    speeds = np.linalg.norm(g.nodes, axis=1)
    assert np.all(nu <= env.c * (1 + speeds) ** env.kappa * (1 + 1e-12))


def test_collision_frequency_hs_angular_refinement():
    # the |v . Omega| kink makes the sphere rule first-order-ish; 1e-4
    # stability under doubling holds from the (64, 64) base on
    g = build_velocity_grid((17, 17, 17), 6.0, 1.0)
    m = maxwellian(1.0, np.zeros(3), 1.0, g)
    i0 = int(np.argmin(np.linalg.norm(g.nodes, axis=1)))
    vals = []
    for ang in ((64, 64), (128, 128)):
        nu, _ = collision_frequency(g, m, CollisionModel(kind="hard_sphere", angular=ang))
        vals.append(nu[i0])
    assert abs(vals[1] - vals[0]) <= 1e-4 * abs(vals[1])
    # and the quadrature values approach the exact angular integral 2 pi |v|
    speeds = np.linalg.norm(g.nodes - g.nodes[i0], axis=1)
    nu_exact = np.pi * float((g.weights * m * speeds).sum())
    assert vals[1] == pytest.approx(nu_exact, rel=2e-4)


# ---------------------------------------------------------------------------
# linearized operator and inverse

def test_linearized_null_space(grid_coarse):
    op = build_linearized(1.0, np.zeros(3), 1.0, grid_coarse, HS)
    for j in range(5):
        img = op.apply(op.basis.chi[j])
        assert _wnorm(img, grid_coarse) <= 1e-6 * _wnorm(op.basis.chi[j], grid_coarse)


def test_linearized_matches_direct_quadrature(grid_coarse, rng):
    op = build_linearized(1.0, np.zeros(3), 1.0, grid_coarse, HS)
    m = op.basis.weight_m
    h = m * rng.standard_normal(grid_coarse.size)
    lhs = op.apply(h)
    rhs = op.basis.p1(2.0 * hard_sphere_Q(m, op.basis.p1(h), grid_coarse, (8, 8),
                                          conserve=False))
    assert np.abs(lhs - rhs).max() <= 1e-12 * np.abs(rhs).max()


def test_inverse_round_trip(grid_coarse, rng):
    for model in (CollisionModel(kind="bgk", nu0=1.2), HS):
        op = build_linearized(1.0, np.zeros(3), 1.0, grid_coarse, model)
        h0 = op.basis.p1(op.basis.weight_m * rng.standard_normal(grid_coarse.size))
        rhs = op.apply(h0)
        h1 = solve_LM_inverse(op, rhs)
        assert np.abs(h1 - h0).max() <= 1e-9 * np.abs(h0).max()


def test_inverse_rejects_macroscopic_rhs(grid_coarse):
    op = build_linearized(1.0, np.zeros(3), 1.0, grid_coarse,
                          CollisionModel(kind="bgk", nu0=1.0))
    with pytest.raises(ValueError):
        solve_LM_inverse(op, op.basis.weight_m.copy())


# ---------------------------------------------------------------------------
# transport coefficients

def test_bgk_transport_closed_form():
    g = build_velocity_grid((24, 24, 24), 8.0, 1.0)
    nu0 = 1.3
    bgk = CollisionModel(kind="bgk", nu0=nu0)
    mu, lam = transport_coefficients(1.0, 1.0, g, bgk)
    p = R_GAS * 1.0 * 1.0
    assert mu == pytest.approx(p / nu0, rel=1e-10)
    assert lam == pytest.approx(2.5 * R_GAS * p / nu0, rel=1e-9)


def test_bgk_transport_ratio_independent_of_rho():
    g = build_velocity_grid((20, 20, 20), 7.0, 1.0)
    bgk = CollisionModel(kind="bgk", nu0=1.0)
    mu1, lam1 = transport_coefficients(1.0, 1.0, g, bgk)
    mu2, lam2 = transport_coefficients(2.0, 1.0, g, bgk)
    assert lam1 / mu1 == pytest.approx(lam2 / mu2, rel=1e-10)


# golden values recorded from the dense-solve sweep on the 12^3 x (8x8) grid
HS_MU_GOLDEN = {0.9: 0.14027, 1.0: 0.14861, 1.2: 0.16322}


def test_hs_transport_monotone_in_theta():
    g = build_velocity_grid((12, 12, 12), 6.0, 1.2)
    mus = {}
    for th in (0.9, 1.0, 1.2):
        mu, lam = transport_coefficients(1.0, th, g, HS)
        assert mu > 0 and lam > 0
        mus[th] = mu
        assert mu == pytest.approx(HS_MU_GOLDEN[th], rel=1e-3)
    assert mus[0.9] < mus[1.0] < mus[1.2]


# ---------------------------------------------------------------------------
# certification

def test_certify_bgk_exact(grid_default):
    bgk = CollisionModel(kind="bgk", nu0=1.7)
    rep = certify_operator_properties(bgk, (1.0, np.zeros(3), 1.0),
                                      (1.0, np.zeros(3), 0.85),
                                      trials=20, grid=grid_default, seed=3)
    assert rep.sigma == 1.0
    assert rep.sigma_abs == 1.7
    assert rep.inverse_bound_ratio <= 1.0 + 1e-10
    assert rep.quad_bound_C == 0.0
    assert rep.passed


def test_certify_window_violation(grid_default):
    bgk = CollisionModel(kind="bgk", nu0=1.0)
    with pytest.raises(WindowViolationError):
        certify_operator_properties(bgk, (1.0, np.zeros(3), 1.0),
                                    (1.0, np.zeros(3), 1.0),
                                    trials=5, grid=grid_default)


def test_certify_hard_sphere_small():
    g = build_velocity_grid((10, 10, 10), 6.0, 1.0)
    rep = certify_operator_properties(HS, (1.0, np.zeros(3), 1.0),
                                      (1.0, np.zeros(3), 0.85),
                                      trials=15, grid=g, seed=5,
                                      quad_bound_trials=2)
    assert rep.sigma > 0
    assert rep.inverse_bound_ratio <= 1.0 + 1e-8
    assert np.isfinite(rep.quad_bound_C) and rep.quad_bound_C > 0
    assert all(np.isfinite(v) for v in rep.projection_moment_C.values())
    assert rep.passed

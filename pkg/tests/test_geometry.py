import numpy as np
import pytest

from strokeopt import geometry as geo, hydro, manifold as mf
from strokeopt.errors import ZeroControl

from conftest import random_manifold_points


def _random_states(mu, n, seed=0):
    rng = np.random.default_rng(seed)
    pts = random_manifold_points(mu, n, seed=seed)
    return np.concatenate([pts, rng.normal(size=(n, 1))], axis=1)


def test_field_X_closed_forms(cfg):
    mu = cfg.mu
    np.testing.assert_allclose(
        geo.field_X(1, np.array([mu, 0.0, 0.0])), [0.0, 0.0, mu * (mu - 1.0)],
        atol=0)
    s = np.array([0.1, -0.2, 0.15])
    np.testing.assert_allclose(
        geo.field_X(2, s), [2 * (-0.2) * 0.9, 0.1 * (0.1 - 1.0), 0.0], atol=1e-16)


def test_field_X_linear_dependence(cfg):
    rng = np.random.default_rng(20)
    for _ in range(50):
        s = rng.normal(size=3)
        combo = (2 * s[1] * geo.field_X(1, s) - 3 * s[2] * geo.field_X(2, s)
                 - s[0] * geo.field_X(3, s))
        assert np.abs(combo).max() < 1e-14


def test_field_X_tangency(cfg):
    # weighted normal contraction vanishes identically (polynomial identity)
    pts = random_manifold_points(cfg.mu, 100, seed=21)
    for j in (1, 2, 3):
        x = geo.field_X(j, pts)
        dots = (mf.ELLIPSOID_WEIGHTS * pts * x).sum(axis=1)
        assert np.abs(dots).max() < 1e-16


def test_field_Z_at_base_state(cfg):
    xi = np.array([cfg.mu, 0.0, 0.0, 0.0])
    z1 = geo.field_Z(1, xi)
    assert z1[3] == 0.0
    z3 = geo.field_Z(3, xi)
    np.testing.assert_allclose(z3, np.zeros(4), atol=0)


def test_field_Z_lift_matches_one_form(cfg):
    xis = _random_states(cfg.mu, 1000, seed=22)
    for j in (1, 2, 3):
        lift = geo.field_Z(j, xis)[:, 3]
        oracle = hydro.one_form(xis[:, :3], geo.field_X(j, xis[:, :3]))
        assert np.abs(lift - oracle).max() < 1e-13


def test_field_Z_linear_dependence(cfg):
    xis = _random_states(cfg.mu, 200, seed=23)
    s1, s2, s3 = xis[:, 0], xis[:, 1], xis[:, 2]
    combo = (2 * s2[:, None] * geo.field_Z(1, xis)
             - 3 * s3[:, None] * geo.field_Z(2, xis)
             - s1[:, None] * geo.field_Z(3, xis))
    assert np.abs(combo).max() < 1e-12


def test_bracket_antisymmetry_and_self(cfg):
    xi = _random_states(cfg.mu, 1, seed=24)[0]
    z1 = lambda x: geo.field_Z(1, x)
    z2 = lambda x: geo.field_Z(2, x)
    self_bracket = geo.lie_bracket(z1, z1, xi)
    assert np.abs(self_bracket).max() < 1e-9
    b12 = geo.lie_bracket(z1, z2, xi)
    b21 = geo.lie_bracket(z2, z1, xi)
    assert np.abs(b12 + b21).max() < 1e-9


def test_bracket_bilinearity(cfg):
    xi = _random_states(cfg.mu, 1, seed=25)[0]
    z1 = lambda x: geo.field_Z(1, x)
    z2 = lambda x: geo.field_Z(2, x)
    z1_scaled = lambda x: 2.0 * geo.field_Z(1, x)
    lhs = geo.lie_bracket(z1_scaled, z2, xi)
    rhs = 2.0 * geo.lie_bracket(z1, z2, xi)
    assert np.abs(lhs - rhs).max() < 1e-9


def test_bracket_matches_closed_form(cfg):
    xis = _random_states(cfg.mu, 100, seed=26)
    z1 = lambda x: geo.field_Z(1, x)
    z2 = lambda x: geo.field_Z(2, x)
    for xi in xis:
        num = geo.lie_bracket(z1, z2, xi)
        np.testing.assert_allclose(num, geo.bracket_z1_z2(xi), atol=1e-7)


def test_bracket_jacobi(cfg):
    # nested numeric brackets: looser tolerance, documented
    xi = _random_states(cfg.mu, 1, seed=27)[0]
    fields = [lambda x, j=j: geo.field_Z(j, x) for j in (1, 2, 3)]

    def nest(a, b):
        return lambda x: geo.lie_bracket(a, b, x)

    total = (geo.lie_bracket(fields[0], nest(fields[1], fields[2]), xi)
             + geo.lie_bracket(fields[1], nest(fields[2], fields[0]), xi)
             + geo.lie_bracket(fields[2], nest(fields[0], fields[1]), xi))
    assert np.abs(total).max() < 1e-6


def test_lie_rank_certificate(cfg):
    xi_i = np.array([cfg.mu, 0.0, 0.0, 0.0])
    assert geo.lie_rank(xi_i, depth=1) == 2
    assert geo.lie_rank(xi_i, depth=2) == 3


def test_lie_rank_at_random_states(cfg):
    xis = _random_states(cfg.mu, 100, seed=28)
    ranks = {geo.lie_rank(xi, depth=2) for xi in xis}
    assert ranks == {3}


def test_lie_rank_scale_invariance(cfg):
    xi = np.array([cfg.mu, 0.0, 0.0, 0.0])
    r1 = geo.lie_rank(xi, depth=2)
    # scaling all columns cannot change the rank
    import strokeopt.geometry as g

    orig = g.field_Z
    try:
        g.field_Z = lambda j, x: 2.0 * orig(j, x)
        r2 = geo.lie_rank(xi, depth=2)
    finally:
        g.field_Z = orig
    assert r1 == r2 == 3


def test_linear_identity_where_s1_nonzero(cfg):
    xis = _random_states(cfg.mu, 300, seed=29)
    keep = np.abs(xis[:, 0]) > 0.05
    xis = xis[keep]
    s1, s2, s3 = xis[:, 0], xis[:, 1], xis[:, 2]
    z3 = geo.field_Z(3, xis)
    recon = (2 * s2[:, None] * geo.field_Z(1, xis)
             - 3 * s3[:, None] * geo.field_Z(2, xis)) / s1[:, None]
    assert np.abs(z3 - recon).max() < 1e-12


# --- constant-speed reparameterization ---------------------------------------

def _sampled_control(fn, n, T):
    t = np.linspace(0.0, T, n + 1)
    return t, fn(t)


def test_reparameterize_constant_output(cfg):
    t, u = _sampled_control(
        lambda t: np.stack([np.sin(2 * np.pi * t) + 1.5, np.cos(2 * np.pi * t)], axis=1),
        512, 1.0)
    t_new, u_new = geo.reparameterize_constant_speed(t, u, 2.0)
    speeds = np.linalg.norm(u_new, axis=1)
    assert speeds.max() - speeds.min() < 1e-8
    # L1 norm preserved
    l1_in = np.trapezoid(np.linalg.norm(u, axis=1), t)
    l1_out = np.trapezoid(speeds, t_new)
    assert l1_out == pytest.approx(l1_in, abs=1e-10)


def test_reparameterize_fixed_point(cfg):
    # constant-speed input with T_new = T comes back unchanged
    t = np.linspace(0.0, 1.0, 257)
    u = np.stack([np.cos(2 * np.pi * t), np.sin(2 * np.pi * t)], axis=1) * 0.7
    t_new, u_new = geo.reparameterize_constant_speed(t, u, 1.0)
    np.testing.assert_allclose(t_new, t, atol=1e-14)
    np.testing.assert_allclose(u_new, u, atol=1e-10)


def test_reparameterize_action_equals_cs_bound(cfg):
    t, u = _sampled_control(
        lambda t: np.stack([2.0 + np.sin(4 * np.pi * t), np.zeros_like(t)], axis=1),
        1024, 1.0)
    T_new = 1.7
    t_new, u_new = geo.reparameterize_constant_speed(t, u, T_new)
    l1 = np.trapezoid(np.linalg.norm(u, axis=1), t)
    action = 0.5 * np.trapezoid((np.linalg.norm(u_new, axis=1)) ** 2, t_new)
    assert action == pytest.approx(l1**2 / (2 * T_new), rel=1e-12)


def test_reparameterize_dead_interval(cfg):
    t = np.linspace(0.0, 1.0, 901)
    u = np.zeros((901, 2))
    mask = (t < 1.0 / 3.0) | (t > 2.0 / 3.0)
    u[mask, 0] = 1.0 + 0.3 * np.sin(6 * np.pi * t[mask])
    t_new, u_new = geo.reparameterize_constant_speed(t, u, 1.0)
    speeds = np.linalg.norm(u_new, axis=1)
    assert speeds.max() - speeds.min() < 1e-8
    l1_in = np.trapezoid(np.linalg.norm(u, axis=1), t)
    assert np.trapezoid(speeds, t_new) == pytest.approx(l1_in, abs=1e-12)


def test_reparameterize_idempotent(cfg):
    rng = np.random.default_rng(30)
    t = np.linspace(0.0, 1.0, 513)
    u = np.stack([1.0 + 0.5 * np.sin(2 * np.pi * t + rng.uniform(0, 2 * np.pi)),
                  0.5 * np.cos(4 * np.pi * t)], axis=1)
    t1, u1 = geo.reparameterize_constant_speed(t, u, 1.0)
    t2, u2 = geo.reparameterize_constant_speed(t1, u1, 1.0)
    np.testing.assert_allclose(u1, u2, atol=1e-9)


def test_reparameterize_zero_control_raises(cfg):
    t = np.linspace(0.0, 1.0, 129)
    with pytest.raises(ZeroControl):
        geo.reparameterize_constant_speed(t, np.zeros((129, 3)), 1.0)

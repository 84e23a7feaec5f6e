import json

import numpy as np
import pytest

from strokeopt import hydro, manifold as mf, stroke as st
from strokeopt.errors import ChartOverflow, NoSignChange, NotSimple
from strokeopt.manifold import ChartId

from conftest import random_simple_strokes


def _retraced_trajectory(gamma, cfg, n=2048, seed=0):
    """Back-and-forth traversal of a curve, symmetric about the turnaround."""
    rng = np.random.default_rng(seed)
    c = rng.uniform(0.0, 0.8)
    t = np.linspace(0.0, 1.0, n + 1)
    u = np.sin(np.pi * t) ** 2
    du = np.pi * np.sin(2.0 * np.pi * t)
    w = (1.0 - c) * u + c * u * u          # monotone smooth profile
    dw = ((1.0 - c) + 2.0 * c * u) * du
    theta, dtheta, phi, dphi = gamma.chart_path(w)
    shapes = mf.chart_to_shape(gamma.chart, phi, theta, cfg.mu)
    dps, dts = mf.chart_tangents(gamma.chart, phi, theta, cfg.mu)
    vel = (dps * dphi[:, None] + dts * dtheta[:, None]) * dw[:, None]
    return st.Trajectory(t=t, shapes=shapes, velocities=vel)


def _reparameterized_trajectory(stroke, cfg, coeffs, n=4096):
    """The same stroke under a smooth monotone time change."""
    t = np.linspace(0.0, 1.0, n + 1)
    w = t.copy()
    dw = np.ones_like(t)
    for k, a in enumerate(coeffs, start=1):
        w = w + a / (2.0 * np.pi * k) * np.sin(2.0 * np.pi * k * t)
        dw = dw + a * np.cos(2.0 * np.pi * k * t)
    theta, dtheta, phi, dphi = stroke.chart_path(w)
    shapes = mf.chart_to_shape(stroke.chart, phi, theta, cfg.mu)
    dps, dts = mf.chart_tangents(stroke.chart, phi, theta, cfg.mu)
    vel = (dps * dphi[:, None] + dts * dtheta[:, None]) * dw[:, None]
    return st.Trajectory(t=t, shapes=shapes, velocities=vel)


def test_spline_basis_partition_of_unity():
    t = np.linspace(0.0, 1.0, 321)
    B = st.basis_matrix(t, 10)
    assert np.abs(B.sum(axis=1) - 1.0).max() < 1e-14


def test_spline_derivative_against_fd():
    rng = np.random.default_rng(1)
    c = rng.normal(size=12)
    h = 1e-7
    for t0 in rng.uniform(0.0, 1.0, 20):
        fd = (st.spline_value(c, t0 + h) - st.spline_value(c, t0 - h)) / (2 * h)
        assert st.spline_derivative(c, t0) == pytest.approx(fd, abs=1e-5)


def test_constant_stroke_evaluates_to_point(cfg):
    s0 = st.SplineStroke(alpha=np.full(10, 0.4), beta=np.full(10, 1.3))
    traj = st.evaluate(s0, 256, cfg)
    m = st.metrics(traj)
    assert m.length == 0.0
    assert m.displacement == 0.0
    assert np.abs(traj.shapes - traj.shapes[0]).max() < 1e-15


def test_evaluated_curve_closed_and_on_manifold(cfg):
    for s0 in random_simple_strokes(3, seed=2):
        traj = st.evaluate(s0, 512, cfg)
        assert np.abs(traj.shapes[0] - traj.shapes[-1]).max() < 1e-12
        resid = np.abs(mf.constraint_value(traj.shapes) - cfg.mu**2)
        assert resid.max() < 1e-15


def test_no_jumps_between_samples(cfg):
    for s0 in random_simple_strokes(3, seed=3):
        traj = st.evaluate(s0, 1024, cfg)
        steps = np.linalg.norm(np.diff(traj.shapes, axis=0), axis=1)
        vmax = np.linalg.norm(traj.velocities, axis=1).max()
        assert steps.max() <= vmax * (1.0 / 1024) * 1.5


def test_equator_circle_length_matches_direct_quadrature(cfg):
    eq = st.SplineStroke(alpha=np.zeros(10), beta=np.full(10, np.pi / 2), winding=1)
    traj = st.evaluate(eq, 4096, cfg)
    m = st.metrics(traj)
    # independent dense quadrature of the g-speed around the circle
    t = np.arange(1 << 14) / (1 << 14)
    sh = mf.chart_to_shape(ChartId.POLAR_Z, np.full_like(t, np.pi / 2),
                           2 * np.pi * t - np.pi, cfg.mu)
    _, dts = mf.chart_tangents(ChartId.POLAR_Z, np.full_like(t, np.pi / 2),
                               2 * np.pi * t - np.pi, cfg.mu)
    speeds = hydro.speed(sh, dts * 2 * np.pi)
    assert m.length == pytest.approx(speeds.mean(), rel=1e-10)


def test_pole_crossing_logs_chart_switch(cfg):
    # a curve passing near the PolarZ pole: phi dips to ~0.05
    p = 10
    tt = np.arange(p) / p
    s0 = st.SplineStroke(alpha=0.3 * np.sin(2 * np.pi * tt),
                         beta=0.55 + 0.5 * np.cos(2 * np.pi * tt))
    traj = st.evaluate(s0, 2048, cfg)
    charts = [c for _, c in traj.chart_log]
    assert ChartId.POLAR_X in charts
    steps = np.linalg.norm(np.diff(traj.shapes, axis=0), axis=1)
    vmax = np.linalg.norm(traj.velocities, axis=1).max()
    assert steps.max() <= vmax * (1.0 / 2048) * 1.5


def test_phi_clamp_flag(cfg):
    s0 = st.SplineStroke(alpha=np.zeros(10), beta=np.full(10, np.pi) + 0.2)
    traj = st.evaluate(s0, 256, cfg)
    assert traj.phi_clamped
    assert traj.phi_excess > 0.0


def test_scallop_theorem_displacement_zero(cfg):
    rng = np.random.default_rng(4)
    for k in range(20):
        gamma = st.SplineStroke(
            alpha=rng.uniform(-1.5, 1.5) + 0.4 * rng.normal(size=10),
            beta=np.pi / 2 + 0.35 * rng.normal(size=10))
        traj = _retraced_trajectory(gamma, cfg, seed=k)
        m = st.metrics(traj)
        assert abs(m.displacement) < 1e-10


def test_retrace_doubles_length(cfg):
    gamma = st.SplineStroke(alpha=0.3 * np.cos(2 * np.pi * np.arange(10) / 10),
                            beta=np.pi / 2 + 0.3 * np.sin(2 * np.pi * np.arange(10) / 10))
    retraced = _retraced_trajectory(gamma, cfg, n=4096, seed=1)
    one_way = st.metrics(st.evaluate(gamma, 4096, cfg)).length
    assert st.metrics(retraced).length == pytest.approx(2 * one_way, rel=1e-6)


def test_reparameterization_invariance(cfg):
    rng = np.random.default_rng(5)
    for s0 in random_simple_strokes(2, seed=6):
        base = st.metrics(st.evaluate(s0, 16384, cfg))
        for _ in range(5):
            coeffs = rng.uniform(-0.25, 0.25, size=3)
            m = st.metrics(_reparameterized_trajectory(s0, cfg, coeffs, n=16384))
            assert m.length == pytest.approx(base.length, abs=1e-8)
            assert m.displacement == pytest.approx(base.displacement, abs=1e-8)


def test_cauchy_schwarz_inequality_random(cfg):
    for s0 in random_simple_strokes(6, seed=7):
        m = st.metrics(st.evaluate(s0, 2048, cfg), T=1.7)
        assert m.action * 2 * 1.7 >= m.length**2 * (1 - 1e-14)
        mc = st.metrics(st.evaluate(s0, 2048, cfg, constant_speed=True), T=1.7)
        assert (mc.max_speed - mc.min_speed) < 1e-6 * mc.max_speed
        assert abs(mc.action - mc.length**2 / (2 * 1.7)) / mc.action < 1e-8


def test_constant_speed_preserves_invariants(cfg):
    # circle-like strokes have speed bounded away from zero, so the
    # resampled trajectory reproduces the invariant quantities sharply
    p = 10
    tt = np.arange(p) / p
    cases = [(0.2, 1.1, 0.30, 0.22), (-0.8, 1.7, 0.25, 0.4), (2.0, 1.3, 0.45, 0.3)]
    for theta_c, phi_c, a, b in cases:
        s0 = st.SplineStroke(alpha=theta_c + a * np.cos(2 * np.pi * tt),
                             beta=phi_c + b * np.sin(2 * np.pi * tt))
        m = st.metrics(st.evaluate(s0, 2048, cfg), T=1.7)
        assert m.min_speed > 0.1 * m.max_speed
        mc = st.metrics(st.evaluate(s0, 2048, cfg, constant_speed=True), T=1.7)
        assert mc.displacement == pytest.approx(m.displacement, abs=1e-8)
        assert mc.length == pytest.approx(m.length, abs=1e-8)


def test_quadrature_self_consistency(cfg):
    s0 = random_simple_strokes(1, seed=8)[0]
    d1 = st.metrics(st.evaluate(s0, 2048, cfg)).displacement
    d2 = st.metrics(st.evaluate(s0, 4096, cfg)).displacement
    assert abs(d1 - d2) < 1e-9


def _pin_basepoint(coeffs, target):
    # the periodic basis interpolates s(0) = (c[p-1] + 4 c[0] + c[1]) / 6
    out = coeffs.copy()
    out[-1] = 6.0 * target - 4.0 * out[0] - out[1]
    return out


def test_concatenation_additivity(cfg):
    # strokes sharing a basepoint: displacement adds along concatenation
    p = 10
    tt = np.arange(p) / p
    base_theta, base_phi = 0.3, 1.4
    s1 = st.SplineStroke(
        alpha=_pin_basepoint(base_theta + 0.25 * np.cos(2 * np.pi * tt), base_theta),
        beta=_pin_basepoint(base_phi + 0.25 * np.sin(2 * np.pi * tt), base_phi))
    s2 = st.SplineStroke(
        alpha=_pin_basepoint(base_theta - 0.2 * np.cos(2 * np.pi * tt), base_theta),
        beta=_pin_basepoint(base_phi - 0.3 * np.sin(2 * np.pi * tt), base_phi))
    n = 4096
    # traverse each leg with vanishing endpoint speed so the junction of the
    # concatenated path is unambiguous on a shared grid
    t1 = _reparameterized_trajectory(s1, cfg, [-1.0], n=n)
    t2 = _reparameterized_trajectory(s2, cfg, [-1.0], n=n)
    np.testing.assert_allclose(t1.shapes[0], t2.shapes[0], atol=1e-12)
    np.testing.assert_allclose(t1.shapes[-1], t2.shapes[0], atol=1e-12)
    concat = st.Trajectory(
        t=np.linspace(0.0, 1.0, 2 * n + 1),
        shapes=np.concatenate([t1.shapes[:-1], t2.shapes]),
        velocities=np.concatenate([t1.velocities[:-1] * 2.0, t2.velocities * 2.0]),
    )
    d_sum = st.metrics(t1).displacement + st.metrics(t2).displacement
    assert st.metrics(concat).displacement == pytest.approx(d_sum, abs=1e-9)


def test_stokes_identity_small_sample(cfg):
    for s0 in random_simple_strokes(5, seed=9):
        line = st.metrics(st.evaluate(s0, 2048, cfg)).displacement
        surf = st.displacement_via_stokes(s0, cfg)
        assert abs(line - surf) < 1e-4 * (1.0 + abs(line))


def test_stokes_orientation_antisymmetry(cfg):
    s0 = random_simple_strokes(1, seed=10)[0]
    d = st.displacement_via_stokes(s0, cfg)
    dr = st.displacement_via_stokes(s0.reversed(), cfg)
    assert abs(d + dr) < 1e-12


def test_stokes_rejects_non_simple(cfg):
    p = 10
    tt = np.arange(p) / p
    fig8 = st.SplineStroke(alpha=0.5 * np.sin(4 * np.pi * tt),
                           beta=np.pi / 2 + 0.45 * np.sin(2 * np.pi * tt))
    if st.is_simple(fig8):
        pytest.skip("construction did not self-intersect")
    with pytest.raises(NotSimple):
        st.displacement_via_stokes(fig8, cfg)


def test_stokes_rejects_winding(cfg):
    eq = st.SplineStroke(alpha=np.zeros(10), beta=np.full(10, np.pi / 2), winding=1)
    with pytest.raises(ChartOverflow):
        st.displacement_via_stokes(eq, cfg)


def test_tiny_circle_matches_density(cfg):
    p, r = 10, 1e-3
    tt = np.arange(p) / p
    center = (1.2, 0.5)
    s0 = st.SplineStroke(alpha=center[1] + r * np.sin(2 * np.pi * tt),
                         beta=center[0] + r * np.cos(2 * np.pi * tt))
    d = st.displacement_via_stokes(s0, cfg)
    # chart shoelace area of the evaluated loop
    t = np.linspace(0.0, 1.0, 2048, endpoint=False)
    theta, _, phi, _ = s0.chart_path(t)
    A = 0.5 * np.sum(phi * np.roll(theta, -1) - np.roll(phi, -1) * theta)
    f = hydro.dL_density_chart(ChartId.POLAR_Z, *center, cfg.mu)
    dens = hydro.chart_area_density(ChartId.POLAR_Z, *center, cfg.mu)
    predicted = mf.orientation_sign(ChartId.POLAR_Z) * f * dens * A
    assert d == pytest.approx(predicted, rel=0.02)


def test_level_set_synthetic_recovery(cfg):
    res = st.level_set_stroke(cfg, grid_n=256, density_fn=lambda s: s[..., 2])
    traj = st.evaluate(res.stroke, 2048, cfg)
    assert np.abs(traj.shapes[:, 2]).max() < 1e-3
    assert st.metrics(traj).displacement > 0.0


def test_level_set_no_sign_change(cfg):
    with pytest.raises(NoSignChange):
        st.level_set_stroke(cfg, grid_n=64, density_fn=lambda s: np.ones(s.shape[:-1]))


def test_level_set_real_density(cfg):
    res = st.level_set_stroke(cfg, grid_n=256)
    m = st.metrics(st.evaluate(res.stroke, 2048, cfg))
    assert m.displacement > 0.1


def test_stroke_json_round_trip(cfg):
    s0 = random_simple_strokes(1, seed=11)[0]
    text = st.stroke_to_json(s0, cfg.mu)
    s1, mu = st.stroke_from_json(text)
    assert mu == cfg.mu
    np.testing.assert_array_equal(s0.alpha, s1.alpha)
    np.testing.assert_array_equal(s0.beta, s1.beta)
    assert s0.chart is s1.chart and s0.winding == s1.winding
    # bit-exact round trip through a second cycle
    assert st.stroke_to_json(s1, mu) == text
    payload = json.loads(text)
    assert set(payload) == {"schema_version", "mu", "p", "alpha", "beta",
                            "chart_convention", "winding"}


def test_trajectory_csv_export(tmp_path, cfg):
    s0 = random_simple_strokes(1, seed=12)[0]
    traj = st.evaluate(s0, 256, cfg)
    path = tmp_path / "traj.csv"
    st.trajectory_csv(traj, path)
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert data.shape == (257, 5)
    assert data[-1, 4] == pytest.approx(st.metrics(traj).displacement, abs=1e-6)


def test_shape_gallery_export(tmp_path, cfg):
    s0 = random_simple_strokes(1, seed=13)[0]
    traj = st.evaluate(s0, 512, cfg)
    path = tmp_path / "gallery.csv"
    st.shape_gallery_csv(traj, 20, 64, path)
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert data.shape == (20 * 64, 4)
    assert len(np.unique(data[:, 0])) == 20

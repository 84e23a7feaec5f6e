"""Ellipsoid shape manifold, its two spherical charts, and the conformal shape map.

Shapes of the swimmer are conformal images of the unit disk under
``z + s1*conj(z) + s2*conj(z)**2 + s3*conj(z)**3``.  The admissible coefficient
vectors with constant swimmer area form the ellipsoid ``s1^2 + 2*s2^2 + 3*s3^2
= mu^2``; everything downstream (metric, displacement form, strokes) lives on
that surface.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError

# Quadratic-form weights of the ellipsoid constraint.
ELLIPSOID_WEIGHTS = np.array([1.0, 2.0, 3.0])

# Angular distance from a chart pole below which the other chart is used.
POLE_SWITCH_ANGLE = 0.1

# Hysteresis: only switch back to the preferred chart beyond this distance.
POLE_RELEASE_ANGLE = 0.3


class ChartId(enum.Enum):
    """The two spherical charts covering the ellipsoid."""

    POLAR_Z = "polar_z"  # poles on the s3 axis
    POLAR_X = "polar_x"  # poles on the s1 axis

    def other(self) -> "ChartId":
        return ChartId.POLAR_X if self is ChartId.POLAR_Z else ChartId.POLAR_Z


@dataclass(frozen=True)
class ChartCoord:
    chart: ChartId
    phi: float    # [0, pi]
    theta: float  # (-pi, pi]


@dataclass(frozen=True)
class SwimmerConfig:
    """Swimmer parameters: ellipsoid size and numerical tolerances.

    ``mu`` must be small enough that the whole ellipsoid stays inside the
    unit ball of the shape norm (so the shape map is a diffeomorphism
    everywhere); this is checked by sampling at construction.
    """

    mu: float = 0.3
    epsilon_mfd: float = 1e-10
    quadrature_n: int = 512

    def __post_init__(self):
        if not 0.0 < self.mu < 1.0:
            raise ConfigError(f"mu must lie in (0, 1), got {self.mu}")
        if self.epsilon_mfd <= 0.0:
            raise ConfigError("epsilon_mfd must be positive")
        if self.quadrature_n < 64 or self.quadrature_n % 2:
            raise ConfigError("quadrature_n must be an even integer >= 64")
        worst = max_shape_norm_on_manifold(self.mu)
        if worst >= 1.0:
            raise ConfigError(
                f"mu={self.mu} is too large: shape norm reaches {worst:.4f} >= 1 "
                "on the ellipsoid, the shape map degenerates"
            )


def constraint_value(s):
    """Quadratic form s1^2 + 2*s2^2 + 3*s3^2, broadcasting over leading axes."""
    s = np.asarray(s, dtype=float)
    return (ELLIPSOID_WEIGHTS * s * s).sum(axis=-1)


def on_manifold(s, cfg: SwimmerConfig) -> bool:
    return bool(abs(constraint_value(s) - cfg.mu**2) <= cfg.epsilon_mfd)


def project_to_manifold(s, mu: float):
    """Radially rescale a near-manifold point onto the ellipsoid exactly."""
    s = np.asarray(s, dtype=float)
    q = constraint_value(s)
    if np.any(q <= 0.0):
        raise DomainError("cannot project the origin onto the ellipsoid")
    return s * (mu / np.sqrt(q))[..., None]


def chi_map(s, z):
    """Conformal shape map: z + s1*conj(z) + s2*conj(z)^2 + s3*conj(z)^3."""
    s = np.asarray(s, dtype=float)
    z = np.asarray(z, dtype=complex)
    zb = np.conj(z)
    return z + s[..., 0] * zb + s[..., 1] * zb**2 + s[..., 2] * zb**3


def boundary_points(s, n: int):
    """Sample the shape boundary chi(s, e^{2*pi*i*t}) at n equispaced t."""
    t = np.arange(n) / n
    return t, chi_map(np.asarray(s, dtype=float), np.exp(2j * np.pi * t))


def _circle_modulus(s, t):
    z = np.exp(1j * t)
    return np.abs(s[0] + 2.0 * s[1] * z + 3.0 * s[2] * z * z)


def shape_norm(s, n_samples: int = 720) -> float:
    """Sup over the unit circle of \\|s1 + 2*s2*z + 3*s3*z^2\\|.

    Dense sampling brackets every local maximum of the degree-2 trigonometric
    polynomial; golden-section refinement then pins the sup to ~1e-12.
    """
    s = np.asarray(s, dtype=float)
    t = np.linspace(0.0, 2.0 * np.pi, n_samples, endpoint=False)
    vals = _circle_modulus(s, t)
    best = 0.0
    # refine around every sampled local maximum (cyclic neighbours)
    left = np.roll(vals, 1)
    right = np.roll(vals, -1)
    peaks = np.nonzero((vals >= left) & (vals >= right))[0]
    h = 2.0 * np.pi / n_samples
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    for i in peaks:
        a = t[i] - h
        b = t[i] + h
        c = b - invphi * (b - a)
        d = a + invphi * (b - a)
        fc = _circle_modulus(s, c)
        fd = _circle_modulus(s, d)
        while b - a > 1e-12:
            if fc > fd:
                b, d, fd = d, c, fc
                c = b - invphi * (b - a)
                fc = _circle_modulus(s, c)
            else:
                a, c, fc = c, d, fd
                d = a + invphi * (b - a)
                fd = _circle_modulus(s, d)
        best = max(best, fc, fd)
    return float(best)


def max_shape_norm_on_manifold(mu: float, n_samples: int = 2048) -> float:
    """Approximate sup of the shape norm over the ellipsoid by sampling.

    A Fibonacci lattice on the ellipsoid bounds the sup from below; the top
    candidates are refined with the exact per-point norm.
    """
    pts = sample_shapes(mu, n_samples)
    t = np.linspace(0.0, 2.0 * np.pi, 720, endpoint=False)
    z = np.exp(1j * t)
    mods = np.abs(
        pts[:, 0:1] + 2.0 * pts[:, 1:2] * z[None, :] + 3.0 * pts[:, 2:3] * z[None, :] ** 2
    ).max(axis=1)
    order = np.argsort(mods)[-8:]
    return max(shape_norm(pts[i]) for i in order)


def sample_shapes(mu: float, n: int):
    """Deterministic quasi-uniform sample of n points on the ellipsoid."""
    k = np.arange(n)
    golden = (1.0 + np.sqrt(5.0)) / 2.0
    cosphi = 1.0 - 2.0 * (k + 0.5) / n
    sinphi = np.sqrt(1.0 - cosphi**2)
    theta = 2.0 * np.pi * k / golden
    w = np.stack([sinphi * np.cos(theta), sinphi * np.sin(theta), cosphi], axis=-1)
    return w * (mu / np.sqrt(ELLIPSOID_WEIGHTS))


def area(s) -> float:
    """Area of the swimmer: pi * (1 - s1^2 - 2*s2^2 - 3*s3^2).

    Raises DomainError when the shape map is no longer a diffeomorphism.
    """
    s = np.asarray(s, dtype=float)
    if shape_norm(s) >= 1.0:
        raise DomainError("shape norm >= 1: the conformal map degenerates")
    return float(np.pi * (1.0 - constraint_value(s)))


# --- charts ---------------------------------------------------------------
#
# Both charts map (phi, theta) onto the ellipsoid exactly:
#   POLAR_Z: (mu sin(phi) cos(theta), mu/sqrt2 sin(phi) sin(theta), mu/sqrt3 cos(phi))
#   POLAR_X: (mu cos(phi), mu/sqrt2 sin(phi) sin(theta), mu/sqrt3 sin(phi) cos(theta))
# In the rescaled coordinates w = (s1, sqrt2 s2, sqrt3 s3) the ellipsoid is the
# sphere of radius mu and the charts are ordinary spherical coordinates around
# the w3 and w1 axes respectively.

_SCALE = 1.0 / np.sqrt(ELLIPSOID_WEIGHTS)


def chart_to_shape(chart: ChartId, phi, theta, mu: float):
    """Map chart coordinates to an ambient point of the ellipsoid.

    phi/theta broadcast; the result satisfies the ellipsoid constraint to
    machine precision by construction.
    """
    phi = np.asarray(phi, dtype=float)
    theta = np.asarray(theta, dtype=float)
    sp, cp = np.sin(phi), np.cos(phi)
    st, ct = np.sin(theta), np.cos(theta)
    if chart is ChartId.POLAR_Z:
        w = np.stack([sp * ct, sp * st, cp], axis=-1)
    else:
        w = np.stack([cp, sp * st, sp * ct], axis=-1)
    return mu * w * _SCALE


def coord_to_shape(c: ChartCoord, mu: float):
    return chart_to_shape(c.chart, c.phi, c.theta, mu)


def chart_tangents(chart: ChartId, phi, theta, mu: float):
    """Coordinate tangent vectors (d_phi sigma, d_theta sigma) of a chart."""
    phi = np.asarray(phi, dtype=float)
    theta = np.asarray(theta, dtype=float)
    sp, cp = np.sin(phi), np.cos(phi)
    st, ct = np.sin(theta), np.cos(theta)
    if chart is ChartId.POLAR_Z:
        dphi = np.stack([cp * ct, cp * st, -sp], axis=-1)
        dtheta = np.stack([-sp * st, sp * ct, np.zeros_like(sp)], axis=-1)
    else:
        dphi = np.stack([-sp, cp * st, cp * ct], axis=-1)
        dtheta = np.stack([np.zeros_like(sp), sp * ct, -sp * st], axis=-1)
    return mu * dphi * _SCALE, mu * dtheta * _SCALE


def orientation_sign(chart: ChartId) -> float:
    """Sign of the chart frame (d_phi, d_theta) against the outward orientation."""
    return 1.0 if chart is ChartId.POLAR_Z else -1.0


def _unit_sphere_coords(s, mu: float):
    w = np.asarray(s, dtype=float) / (mu * _SCALE)
    return w / np.linalg.norm(w, axis=-1, keepdims=True)


def pole_angle(s, mu: float, chart: ChartId):
    """Angular distance (in the sphere picture) to the nearest pole of a chart."""
    w = _unit_sphere_coords(s, mu)
    axis = w[..., 2] if chart is ChartId.POLAR_Z else w[..., 0]
    return np.arccos(np.clip(np.abs(axis), -1.0, 1.0))


def chart_from_shape(s, mu: float, preferred: ChartId = ChartId.POLAR_Z) -> ChartCoord:
    """Chart coordinates of an on-manifold point.

    The preferred chart is used unless the point lies within POLE_SWITCH_ANGLE
    of one of its poles, in which case the other chart takes over (the two
    pole pairs are a quarter turn apart, so at most one chart is ever close).
    """
    w = _unit_sphere_coords(s, mu)
    chart = preferred
    if pole_angle(s, mu, chart) < POLE_SWITCH_ANGLE:
        chart = chart.other()
    if chart is ChartId.POLAR_Z:
        phi = float(np.arccos(np.clip(w[2], -1.0, 1.0)))
        theta = float(np.arctan2(w[1], w[0]))
    else:
        phi = float(np.arccos(np.clip(w[0], -1.0, 1.0)))
        theta = float(np.arctan2(w[1], w[2]))
    return ChartCoord(chart, phi, theta)


def boundary_csv(s, n: int, path):
    """Write the sampled shape boundary as CSV columns (t, x, y)."""
    t, pts = boundary_points(s, n)
    rows = np.column_stack([t, pts.real, pts.imag])
    header = "t,x,y"
    np.savetxt(path, rows, delimiter=",", header=header, comments="")

"""Closed-form hydrodynamics of the potential-flow swimmer.

Added-mass data (Mr, N, Md) as polynomials in the shape coefficients, the
effort metric g = Md - N (x) N / Mr, the displacement 1-form L = -N/Mr, the
density of its exterior derivative on the ellipsoid, and stroke efficiency.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import manifold
from .errors import DegenerateMetric, ZeroDisplacement
from .manifold import ChartId, SwimmerConfig

# central-difference step for chart derivatives of the 1-form
_FD_STEP = 1e-5


@dataclass(frozen=True)
class MassData:
    """Added-mass triple: rigid scalar Mr, coupling row N, deformation matrix Md."""

    Mr: np.ndarray   # (...)
    N: np.ndarray    # (..., 3)
    Md: np.ndarray   # (..., 3, 3), symmetric


def mass_data(s) -> MassData:
    """Evaluate the added-mass polynomials, broadcasting over leading axes."""
    s = np.asarray(s, dtype=float)
    s1, s2, s3 = s[..., 0], s[..., 1], s[..., 2]

    Mr = 2.0 - 2.0 * s1

    N = np.stack(
        [
            -3.0 * s2 + 2.0 * s1 * s2 + 3.0 * s2 * s3,
            -s1 - 4.0 * s3 + s1**2 + 3.0 * s1 * s3,
            -2.0 * s2 + 3.0 * s1 * s2,
        ],
        axis=-1,
    )

    d11 = 4.0 * s2**2 - 3.0 * s3 + 4.5 * s3**2 + 1.0
    d12 = 2.0 * s1 * s2 + 6.0 * s2 * s3
    d13 = 4.0 * s2**2 - 0.5 * s1 + 1.5 * s1 * s3
    d22 = s1**2 + 6.0 * s1 * s3 + 9.0 * s3**2 + 2.0 / 3.0
    d33 = 4.0 * s2**2 + 0.5 * s1**2 + 0.5
    row1 = np.stack([d11, d12, d13], axis=-1)
    row2 = np.stack([d12, d22, d12], axis=-1)
    row3 = np.stack([d13, d12, d33], axis=-1)
    Md = np.stack([row1, row2, row3], axis=-2)

    return MassData(Mr=Mr, N=N, Md=Md)


def metric_matrix(s):
    """Effort metric on ambient coordinates: G = Md - N (x) N / Mr."""
    md = mass_data(s)
    return md.Md - md.N[..., :, None] * md.N[..., None, :] / md.Mr[..., None, None]


def _tangent_frame(s):
    """Euclidean-orthonormal basis of the tangent plane at an ellipsoid point."""
    s = np.asarray(s, dtype=float)
    n = manifold.ELLIPSOID_WEIGHTS * s
    n = n / np.linalg.norm(n)
    k = int(np.argmin(np.abs(n)))
    a = np.zeros(3)
    a[k] = 1.0
    e1 = a - np.dot(a, n) * n
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    return e1, e2


def pullback_eigenvalues(s):
    """Eigenvalues of the metric restricted to the tangent plane at s.

    At the origin (no tangent plane) the full ambient spectrum is used.
    """
    G = metric_matrix(s)
    if np.linalg.norm(manifold.ELLIPSOID_WEIGHTS * np.asarray(s, dtype=float)) < 1e-150:
        w = np.linalg.eigvalsh(G)
        return float(w[0]), float(w[-1])
    e1, e2 = _tangent_frame(s)
    a = e1 @ G @ e1
    b = e1 @ G @ e2
    c = e2 @ G @ e2
    half_tr = 0.5 * (a + c)
    disc = np.sqrt(0.25 * (a - c) ** 2 + b * b)
    return half_tr - disc, half_tr + disc


def metric(s, v, w) -> float:
    """Scalar product g_s(v, w) of tangent vectors at s.

    Raises DegenerateMetric when the tangent restriction of g is (numerically)
    no longer positive definite, which signals leaving the valid regime.
    """
    lo, _ = pullback_eigenvalues(s)
    if not lo >= 1e-12:
        raise DegenerateMetric(f"pullback eigenvalue {lo:.3e} < 1e-12 at s={s}")
    G = metric_matrix(s)
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    # symmetrized contraction: exchanging v and w is exact, not just to rounding
    sym = 0.5 * (np.outer(v, w) + np.outer(w, v))
    return float((G * sym).sum())


def speed(s, v):
    """g-norm of tangent vectors; broadcasts, no degeneracy check (hot path)."""
    G = metric_matrix(s)
    v = np.asarray(v, dtype=float)
    q = np.einsum("...i,...ij,...j->...", v, G, v)
    return np.sqrt(np.maximum(q, 0.0))


def one_form(s, v):
    """Displacement rate L_s(v) = -(N(s) . v) / Mr(s); broadcasts."""
    md = mass_data(s)
    v = np.asarray(v, dtype=float)
    return -(md.N * v).sum(axis=-1) / md.Mr


def chart_one_form_components(chart: ChartId, phi, theta, mu: float):
    """Components (L(d_phi), L(d_theta)) of the pulled-back 1-form in a chart."""
    s = manifold.chart_to_shape(chart, phi, theta, mu)
    dphi, dtheta = manifold.chart_tangents(chart, phi, theta, mu)
    return one_form(s, dphi), one_form(s, dtheta)


def chart_area_density(chart: ChartId, phi, theta, mu: float):
    """sqrt(det G) of the metric in chart coordinates (the g-area density)."""
    s = manifold.chart_to_shape(chart, phi, theta, mu)
    dphi, dtheta = manifold.chart_tangents(chart, phi, theta, mu)
    G = metric_matrix(s)
    g11 = np.einsum("...i,...ij,...j->...", dphi, G, dphi)
    g12 = np.einsum("...i,...ij,...j->...", dphi, G, dtheta)
    g22 = np.einsum("...i,...ij,...j->...", dtheta, G, dtheta)
    det = g11 * g22 - g12 * g12
    return np.sqrt(np.maximum(det, 0.0))


def dL_density_chart(chart: ChartId, phi, theta, mu: float, step: float = _FD_STEP):
    """Density f of dL against the oriented g-area form, in chart points.

    Computed as (d_phi L_theta - d_theta L_phi) / sqrt(det G) by central
    differences in the chart variables, with the sign fixed by the global
    outward orientation of the ellipsoid.
    """
    phi = np.asarray(phi, dtype=float)
    theta = np.asarray(theta, dtype=float)

    def a_phi(p, t):
        return chart_one_form_components(chart, p, t, mu)[0]

    def a_theta(p, t):
        return chart_one_form_components(chart, p, t, mu)[1]

    d_phi_atheta = (a_theta(phi + step, theta) - a_theta(phi - step, theta)) / (2 * step)
    d_theta_aphi = (a_phi(phi, theta + step) - a_phi(phi, theta - step)) / (2 * step)
    curl = d_phi_atheta - d_theta_aphi

    dens = chart_area_density(chart, phi, theta, mu)
    if np.any(dens < 1e-12):
        raise DegenerateMetric("vanishing g-area density (chart pole?)")
    return manifold.orientation_sign(chart) * curl / dens


def dL_density(s, cfg: SwimmerConfig) -> float:
    """Density f of dL at an on-manifold point (chart chosen away from poles)."""
    c = manifold.chart_from_shape(s, cfg.mu)
    return float(dL_density_chart(c.chart, c.phi, c.theta, cfg.mu))


def dL_total(cfg: SwimmerConfig, n_phi: int = 512, n_theta: int = 512) -> float:
    """Integral of dL over the whole (closed) ellipsoid; zero up to quadrature.

    Midpoint rule in the PolarZ chart, which covers the surface up to the two
    poles (a null set for the integral).
    """
    phi = (np.arange(n_phi) + 0.5) * np.pi / n_phi
    theta = -np.pi + (np.arange(n_theta) + 0.5) * 2.0 * np.pi / n_theta
    P, T = np.meshgrid(phi, theta, indexing="ij")
    f = dL_density_chart(ChartId.POLAR_Z, P, T, cfg.mu)
    dens = chart_area_density(ChartId.POLAR_Z, P, T, cfg.mu)
    cell = (np.pi / n_phi) * (2.0 * np.pi / n_theta)
    return float((f * dens).sum() * cell)


def density_map_csv(cfg: SwimmerConfig, n_phi: int, n_theta: int, path,
                    chart: ChartId = ChartId.POLAR_Z):
    """Write a chart grid of the dL density as CSV columns (phi, theta, f)."""
    phi = (np.arange(n_phi) + 0.5) * np.pi / n_phi
    theta = -np.pi + (np.arange(n_theta) + 0.5) * 2.0 * np.pi / n_theta
    P, T = np.meshgrid(phi, theta, indexing="ij")
    f = dL_density_chart(chart, P, T, cfg.mu)
    rows = np.column_stack([P.ravel(), T.ravel(), f.ravel()])
    np.savetxt(path, rows, delimiter=",", header="phi,theta,f", comments="")


def efficiency(traj, T: float) -> float:
    """Swimming efficiency of an evaluated stroke.

    Ratio of |mean velocity|^2 * Mr(s_i) to the mean expended power, with the
    rigid velocity reconstructed from the zero-impulse dynamics r' = L_s(s').
    Raises ZeroDisplacement for strokes with no net motion (Scallop case).
    """
    from scipy.integrate import simpson

    s = traj.shapes
    ds = traj.velocities
    t = traj.t
    md = mass_data(s)
    rdot = one_form(s, ds)          # in the [0,1] curve clock
    ndot = (md.N * ds).sum(axis=-1)
    sMds = np.einsum("...i,...ij,...j->...", ds, md.Md, ds)
    power_integral = simpson(md.Mr * rdot**2 + rdot * ndot + sMds, x=t)

    displacement = simpson(rdot, x=t)
    v_mean = displacement / T
    if abs(v_mean) < 1e-12:
        raise ZeroDisplacement("mean velocity below 1e-12; efficiency undefined")

    mean_power = power_integral / T**2  # two clock factors: dt and velocity
    return float(v_mean**2 * md.Mr[0] / mean_power)

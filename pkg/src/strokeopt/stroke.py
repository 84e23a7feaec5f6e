"""Closed strokes on the ellipsoid: periodic splines, quadrature, level sets.

A stroke is a closed curve of shapes, parameterized in a chart by two periodic
cubic splines theta(t), phi(t) (plus an optional integer winding of theta, so
equator-like circuits are representable).  Evaluation is analytic: both the
curve and its derivative come straight from the spline basis.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import cumulative_trapezoid, simpson

from . import hydro, manifold
from .errors import ChartOverflow, NoSignChange, NotSimple, PoleDegeneracy
from .manifold import ChartId, POLE_RELEASE_ANGLE, POLE_SWITCH_ANGLE, SwimmerConfig

STROKE_SCHEMA_VERSION = 1

# Angular closeness to BOTH charts' poles that marks a degenerate sample.
_BOTH_POLES_TOL = 1e-3

# phi margin defining "contained in one chart" for the Stokes route.
_CHART_MARGIN = 1e-2


# --- periodic uniform cubic B-spline basis ---------------------------------

def _spline_weights(t, p: int):
    """Index and the four cardinal weights/derivatives at each parameter."""
    t = np.asarray(t, dtype=float)
    x = (t % 1.0) * p
    i = np.floor(x).astype(int) % p
    u = x - np.floor(x)
    u2 = u * u
    u3 = u2 * u
    w = np.stack(
        [
            (1.0 - u) ** 3 / 6.0,
            (3.0 * u3 - 6.0 * u2 + 4.0) / 6.0,
            (-3.0 * u3 + 3.0 * u2 + 3.0 * u + 1.0) / 6.0,
            u3 / 6.0,
        ],
        axis=-1,
    )
    dw = np.stack(
        [
            -0.5 * (1.0 - u) ** 2,
            0.5 * (3.0 * u2 - 4.0 * u),
            0.5 * (-3.0 * u2 + 2.0 * u + 1.0),
            0.5 * u2,
        ],
        axis=-1,
    ) * p
    return i, w, dw


def basis_matrix(t, p: int):
    """Dense (len(t), p) evaluation matrix of the periodic cubic basis."""
    i, w, _ = _spline_weights(t, p)
    return _scatter(i, w, p)


def basis_derivative_matrix(t, p: int):
    i, _, dw = _spline_weights(t, p)
    return _scatter(i, dw, p)


def _scatter(i, w, p):
    m = np.zeros(w.shape[:-1] + (p,))
    rows = np.arange(w.shape[0])
    for k in range(4):
        np.add.at(m, (rows, (i + k - 1) % p), w[..., k])
    return m


def spline_value(coef, t):
    """Evaluate a periodic cubic spline with p = len(coef) uniform knots."""
    coef = np.asarray(coef, dtype=float)
    p = len(coef)
    i, w, _ = _spline_weights(t, p)
    idx = (i[..., None] + np.arange(-1, 3)) % p
    return (coef[idx] * w).sum(axis=-1)


def spline_derivative(coef, t):
    coef = np.asarray(coef, dtype=float)
    p = len(coef)
    i, _, dw = _spline_weights(t, p)
    idx = (i[..., None] + np.arange(-1, 3)) % p
    return (coef[idx] * dw).sum(axis=-1)


# --- stroke and trajectory --------------------------------------------------

@dataclass(frozen=True)
class SplineStroke:
    """Closed spline curve in one chart: theta/phi coefficients plus winding."""

    alpha: np.ndarray                 # theta coefficients, shape (p,)
    beta: np.ndarray                  # phi coefficients, shape (p,)
    chart: ChartId = ChartId.POLAR_Z
    winding: int = 0

    def __post_init__(self):
        object.__setattr__(self, "alpha", np.asarray(self.alpha, dtype=float))
        object.__setattr__(self, "beta", np.asarray(self.beta, dtype=float))
        if self.alpha.shape != self.beta.shape or self.alpha.ndim != 1:
            raise ValueError("alpha and beta must be 1-d arrays of equal length")

    @property
    def p(self) -> int:
        return len(self.alpha)

    def chart_path(self, t):
        """Raw chart coordinates (theta, phi) and derivatives at parameters t."""
        theta = spline_value(self.alpha, t) + 2.0 * np.pi * self.winding * np.asarray(t)
        dtheta = spline_derivative(self.alpha, t) + 2.0 * np.pi * self.winding
        phi = spline_value(self.beta, t)
        dphi = spline_derivative(self.beta, t)
        return theta, dtheta, phi, dphi

    def reversed(self) -> "SplineStroke":
        """The same curve traversed backwards."""
        return replace(
            self,
            alpha=self.alpha[::-1].copy(),
            beta=self.beta[::-1].copy(),
            winding=-self.winding,
        )


@dataclass
class Trajectory:
    """Sampled stroke: parameter grid, on-manifold points, exact derivatives."""

    t: np.ndarray           # (n+1,)
    shapes: np.ndarray      # (n+1, 3)
    velocities: np.ndarray  # (n+1, 3), d shape / d t
    chart_log: list = field(default_factory=list)   # [(t, ChartId)] switch events
    phi_clamped: bool = False
    phi_excess: float = 0.0
    displacement_profile: np.ndarray | None = None  # cumulative r(t)

    @property
    def n(self) -> int:
        return len(self.t) - 1


@dataclass(frozen=True)
class StrokeMetrics:
    displacement: float
    length: float
    action: float
    max_speed: float
    min_speed: float


def _chart_switch_log(shapes, t, mu, preferred: ChartId):
    d_pref = manifold.pole_angle(shapes, mu, preferred)
    d_other = manifold.pole_angle(shapes, mu, preferred.other())
    log = [(float(t[0]), preferred)]
    on_preferred = True
    for k in range(len(t)):
        if on_preferred:
            if d_pref[k] < POLE_SWITCH_ANGLE:
                on_preferred = False
                log.append((float(t[k]), preferred.other()))
        else:
            if d_other[k] < POLE_SWITCH_ANGLE or d_pref[k] > POLE_RELEASE_ANGLE:
                on_preferred = True
                log.append((float(t[k]), preferred))
    return log


def evaluate(stroke: SplineStroke, n: int, cfg: SwimmerConfig,
             constant_speed: bool = False, theta_offset: float = 0.0) -> Trajectory:
    """Sample a stroke and its derivative analytically on n+1 parameter points.

    theta is an angle, so out-of-range values wrap harmlessly; phi values
    outside [0, pi] are clamped and flagged (such strokes are rejected by the
    optimizer).  With constant_speed=True the same curve is resampled so that
    the g-speed is constant at every sample.
    """
    if n < 64:
        raise ValueError("need n >= 64 samples")
    t = np.linspace(0.0, 1.0, n + 1)
    if constant_speed:
        t = _constant_speed_parameters(stroke, n, cfg, theta_offset)

    theta, dtheta, phi_raw, dphi = stroke.chart_path(t)
    theta = theta + theta_offset

    over = np.maximum(phi_raw - np.pi, 0.0) + np.maximum(-phi_raw, 0.0)
    clamped = bool(np.any(over > 0.0))
    excess = float(np.trapezoid(over**2, t)) if clamped else 0.0
    phi = np.clip(phi_raw, 0.0, np.pi)
    dphi = np.where(over > 0.0, 0.0, dphi)

    shapes = manifold.chart_to_shape(stroke.chart, phi, theta, cfg.mu)
    d_phi_sigma, d_theta_sigma = manifold.chart_tangents(stroke.chart, phi, theta, cfg.mu)
    velocities = d_phi_sigma * dphi[:, None] + d_theta_sigma * dtheta[:, None]

    if constant_speed:
        v = hydro.speed(shapes, velocities)
        total = _stroke_length(stroke, cfg, theta_offset)
        safe = np.maximum(v, 1e-300)
        velocities = velocities * (total / safe)[:, None]

    near_z = manifold.pole_angle(shapes, cfg.mu, ChartId.POLAR_Z) < _BOTH_POLES_TOL
    near_x = manifold.pole_angle(shapes, cfg.mu, ChartId.POLAR_X) < _BOTH_POLES_TOL
    if np.any(near_z & near_x):
        raise PoleDegeneracy("curve passes within 1e-3 rad of both charts' poles")

    t_out = np.linspace(0.0, 1.0, n + 1) if constant_speed else t
    log = _chart_switch_log(shapes, t_out, cfg.mu, stroke.chart)
    rdot = hydro.one_form(shapes, velocities)
    profile = np.concatenate([[0.0], cumulative_trapezoid(rdot, t_out)])

    return Trajectory(
        t=t_out,
        shapes=shapes,
        velocities=velocities,
        chart_log=log,
        phi_clamped=clamped,
        phi_excess=excess,
        displacement_profile=profile,
    )


def _speed_profile(stroke, cfg, theta_offset, m: int):
    t = np.linspace(0.0, 1.0, m + 1)
    theta, dtheta, phi, dphi = stroke.chart_path(t)
    theta = theta + theta_offset
    shapes = manifold.chart_to_shape(stroke.chart, phi, theta, cfg.mu)
    dps, dts = manifold.chart_tangents(stroke.chart, phi, theta, cfg.mu)
    vel = dps * dphi[:, None] + dts * dtheta[:, None]
    return t, hydro.speed(shapes, vel)


def _stroke_length(stroke, cfg, theta_offset=0.0, m: int = 4096):
    t, v = _speed_profile(stroke, cfg, theta_offset, m)
    return float(simpson(v, x=t))


def _constant_speed_parameters(stroke, n, cfg, theta_offset):
    """Parameter values at (approximately) equal g-arclength increments."""
    m = max(8 * n, 2048)
    t, v = _speed_profile(stroke, cfg, theta_offset, m)
    arc = np.concatenate([[0.0], cumulative_trapezoid(v, t)])
    if arc[-1] <= 0.0:
        return np.linspace(0.0, 1.0, n + 1)
    keep = np.concatenate([[True], np.diff(arc) > 0.0])
    targets = np.linspace(0.0, arc[-1], n + 1)
    return np.interp(targets, arc[keep], t[keep])


def metrics(traj: Trajectory, T: float = 1.0) -> StrokeMetrics:
    """Displacement, length, action, and speed extrema of a sampled stroke.

    Displacement and length depend only on the curve; the action uses the
    uniform clock scaled to total duration T.  Composite Simpson throughout.
    """
    if T <= 0.0:
        raise ValueError("T must be positive")
    t = traj.t
    rdot = hydro.one_form(traj.shapes, traj.velocities)
    v = hydro.speed(traj.shapes, traj.velocities)
    displacement = float(simpson(rdot, x=t))
    length = float(simpson(v, x=t))
    action = float(simpson(v * v, x=t)) / (2.0 * T)
    return StrokeMetrics(
        displacement=displacement,
        length=length,
        action=action,
        max_speed=float(v.max()) / T,
        min_speed=float(v.min()) / T,
    )


# --- simplicity and the Stokes route ----------------------------------------

def _segments_intersect(p, q):
    """Vectorized proper-intersection test between all segment pairs."""
    # p, q: (m, 2, 2) arrays of segments [start, end]
    a1, a2 = p[:, None, 0], p[:, None, 1]
    b1, b2 = q[None, :, 0], q[None, :, 1]

    def cross(o, u, w):
        return (u[..., 0] - o[..., 0]) * (w[..., 1] - o[..., 1]) \
            - (u[..., 1] - o[..., 1]) * (w[..., 0] - o[..., 0])

    d1 = cross(b1, b2, a1)
    d2 = cross(b1, b2, a2)
    d3 = cross(a1, a2, b1)
    d4 = cross(a1, a2, b2)
    return (d1 * d2 < 0.0) & (d3 * d4 < 0.0)


def is_simple(stroke: SplineStroke, n: int = 512, theta_offset: float = 0.0) -> bool:
    """Segment-pair sweep for self-intersection in the chart plane."""
    t = np.linspace(0.0, 1.0, n, endpoint=False)
    theta, _, phi, _ = stroke.chart_path(t)
    pts = np.stack([theta + theta_offset, phi], axis=-1)
    seg = np.stack([pts, np.roll(pts, -1, axis=0)], axis=1)
    hits = _segments_intersect(seg, seg)
    # adjacent segments (cyclically) legitimately share endpoints
    idx = np.arange(n)
    adj = (np.abs(idx[:, None] - idx[None, :]) <= 1) | \
          (np.abs(idx[:, None] - idx[None, :]) == n - 1)
    return not bool(np.any(hits & ~adj))


def _require_single_chart(stroke, n=512):
    t = np.linspace(0.0, 1.0, n, endpoint=False)
    theta, _, phi, _ = stroke.chart_path(t)
    if stroke.winding != 0:
        raise ChartOverflow("winding stroke is not contractible in its chart")
    if phi.min() < _CHART_MARGIN or phi.max() > np.pi - _CHART_MARGIN:
        raise ChartOverflow("curve reaches the chart poles")
    return np.stack([phi, theta], axis=-1)   # plane coords (x=phi, y=theta)


def _points_in_polygon(poly, pts):
    """Crossing-number (ray cast) test, scanline-grouped by shared y values."""
    px, py = poly[:-1, 0], poly[:-1, 1]
    qx, qy = poly[1:, 0], poly[1:, 1]
    dy = np.where(qy == py, 1.0, qy - py)
    inside = np.zeros(len(pts), dtype=bool)
    order = np.argsort(pts[:, 1], kind="stable")
    ys = pts[order, 1]
    starts = np.flatnonzero(np.concatenate([[True], np.diff(ys) != 0.0]))
    bounds = np.append(starts, len(ys))
    for a, b in zip(bounds[:-1], bounds[1:]):
        y = ys[a]
        cond = (py > y) != (qy > y)
        if not cond.any():
            continue
        xc = np.sort(px[cond] + (qx - px)[cond] * (y - py[cond]) / dy[cond])
        idx = order[a:b]
        n_right = len(xc) - np.searchsorted(xc, pts[idx, 0], side="right")
        inside[idx] = (n_right % 2) == 1
    return inside


def _enclosed_integral(poly, integrand, base: int = 256, refine_levels: int = 2):
    """Integral of a plane density over the region enclosed by a polygon.

    Winding-number rasterization on the bounding box at `base` resolution;
    cells touched by the boundary are refined dyadically (refine_levels times,
    so 256 -> 1024 by default).  `integrand(x, y)` must broadcast.
    """
    lo = poly.min(axis=0) - 1e-9
    hi = poly.max(axis=0) + 1e-9
    span = hi - lo
    hx, hy = span / base

    # mark boundary cells; midpoint subdivision keeps the marker set (and
    # hence the whole quadrature) invariant under curve reversal
    marks = poly
    for _ in range(32):
        seg = np.abs(np.diff(marks, axis=0)) / [hx, hy]
        if seg.max() <= 0.5:
            break
        mids = 0.5 * (marks[:-1] + marks[1:])
        out = np.empty((len(marks) + len(mids), 2))
        out[0::2] = marks
        out[1::2] = mids
        marks = out
    ci = np.clip(((marks[:, 0] - lo[0]) / hx).astype(int), 0, base - 1)
    cj = np.clip(((marks[:, 1] - lo[1]) / hy).astype(int), 0, base - 1)
    boundary = np.zeros((base, base), dtype=bool)
    boundary[ci, cj] = True
    # pad by one cell so partially-covered neighbours refine too
    padded = boundary.copy()
    padded[1:, :] |= boundary[:-1, :]
    padded[:-1, :] |= boundary[1:, :]
    padded[:, 1:] |= boundary[:, :-1]
    padded[:, :-1] |= boundary[:, 1:]

    xs = lo[0] + (np.arange(base) + 0.5) * hx
    ys = lo[1] + (np.arange(base) + 0.5) * hy
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    interior = ~padded
    pts = np.stack([X[interior], Y[interior]], axis=-1)
    total = 0.0
    if len(pts):
        ins = _points_in_polygon(poly, pts)
        if np.any(ins):
            total += float(np.sum(integrand(pts[ins, 0], pts[ins, 1]))) * hx * hy

    # refine boundary cells
    cells = np.stack(np.nonzero(padded), axis=-1).astype(float)
    cell_lo = lo + cells * [hx, hy]
    fx, fy = hx, hy
    for _ in range(refine_levels):
        fx /= 2.0
        fy /= 2.0
        offs = np.array([[0.0, 0.0], [0.0, fy], [fx, 0.0], [fx, fy]])
        cell_lo = (cell_lo[:, None, :] + offs[None, :, :]).reshape(-1, 2)
    centers = cell_lo + 0.5 * np.array([fx, fy])
    ins = _points_in_polygon(poly, centers)
    if np.any(ins):
        total += float(np.sum(integrand(centers[ins, 0], centers[ins, 1]))) * fx * fy

    # signed orientation of the polygon (shoelace in (x, y))
    x, y = poly[:, 0], poly[:, 1]
    signed = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
    return total * np.sign(signed)


def displacement_via_stokes(stroke: SplineStroke, cfg: SwimmerConfig,
                            n: int = 1024, base: int = 256,
                            refine_levels: int = 2) -> float:
    """Displacement of a simple single-chart stroke as a surface integral.

    Quadrature of the dL density times the g-area form over the enclosed
    chart region; the independent counterpart of the line-integral route in
    metrics().
    """
    if not is_simple(stroke):
        raise NotSimple("stroke self-intersects")
    _require_single_chart(stroke)
    # a vertex count divisible by 2p makes the sampled polygon (as a point
    # set) invariant under curve reversal, so reversal negates the result
    # exactly instead of only to raster accuracy
    n_eff = int(np.ceil(n / (2 * stroke.p))) * 2 * stroke.p
    t = np.linspace(0.0, 1.0, n_eff, endpoint=False)
    theta, _, phi, _ = stroke.chart_path(t)
    poly = np.stack([phi, theta], axis=-1)
    poly = np.concatenate([poly, poly[:1]], axis=0)

    chart = stroke.chart
    sign = manifold.orientation_sign(chart)

    def integrand(x, y):
        f = hydro.dL_density_chart(chart, x, y, cfg.mu)
        dens = hydro.chart_area_density(chart, x, y, cfg.mu)
        return f * dens

    # positive plane orientation (x=phi, y=theta) is the chart frame
    # orientation; convert to the global outward convention
    return sign * _enclosed_integral(poly, integrand, base, refine_levels)


# --- level-set extraction ----------------------------------------------------

@dataclass
class LevelSetResult:
    stroke: SplineStroke
    n_components: int
    disconnected: bool
    polyline: np.ndarray   # fitted component, chart (theta, phi) columns


def _stitch_contours(contours, phi, theta):
    """Convert grid-index contours to chart polylines, joining the theta seam."""
    closed, open_ = [], []
    for c in contours:
        pphi = np.interp(c[:, 0], np.arange(len(phi)), phi)
        pthe = np.interp(c[:, 1], np.arange(len(theta)), theta)
        pl = np.stack([pthe, pphi], axis=-1)
        if np.allclose(c[0], c[-1]):
            closed.append(pl[:-1])
        else:
            open_.append(pl)
    # join open pieces across theta = +-pi (same phi at both ends)
    while open_:
        chain = open_.pop(0)
        merged = True
        while merged:
            merged = False
            for k, other in enumerate(open_):
                for flip in (False, True):
                    cand = other[::-1] if flip else other
                    if abs(abs(chain[-1, 0]) - np.pi) < 0.2 and \
                       abs(abs(cand[0, 0]) - np.pi) < 0.2 and \
                       abs(chain[-1, 1] - cand[0, 1]) < 0.05:
                        shift = np.round((chain[-1, 0] - cand[0, 0]) / (2 * np.pi))
                        cand = cand + [shift * 2 * np.pi, 0.0]
                        chain = np.concatenate([chain, cand], axis=0)
                        open_.pop(k)
                        merged = True
                        break
                if merged:
                    break
        closed.append(chain)
    return closed


def _fit_periodic_spline(polyline, p: int):
    """Least-squares periodic spline fit of a closed chart polyline.

    polyline columns are (theta, phi) with theta unwrapped; the net theta turn
    becomes the integer winding of the stroke.
    """
    theta, phi = polyline[:, 0], polyline[:, 1]
    d = np.linalg.norm(np.diff(polyline, axis=0), axis=1)
    u = np.concatenate([[0.0], np.cumsum(d)])
    winding = int(np.round((theta[-1] - theta[0]) / (2.0 * np.pi)))
    # the curve closes through the winding jump, so the true closing gap is
    # measured after removing it
    closing = np.hypot(theta[-1] - theta[0] - 2.0 * np.pi * winding, phi[-1] - phi[0])
    total = u[-1] + max(closing, 1e-12)
    u = u / total
    theta_fit = theta - 2.0 * np.pi * winding * u
    B = basis_matrix(u, p)
    alpha, *_ = np.linalg.lstsq(B, theta_fit, rcond=None)
    beta, *_ = np.linalg.lstsq(B, phi, rcond=None)
    return alpha, beta, winding


def level_set_stroke(cfg: SwimmerConfig, grid_n: int = 256, p: int = 10,
                     density_fn=None, chart: ChartId = ChartId.POLAR_Z,
                     n_eval: int = 2048) -> LevelSetResult:
    """Extract the zero level set of the dL density as a stroke.

    Marching squares on a chart grid, component selection by largest
    displacement magnitude, orientation fixed so the displacement is
    positive.  `density_fn(shapes) -> f` overrides the physical density
    (test hook).
    """
    from skimage import measure

    margin = 0.12
    phi = np.linspace(margin, np.pi - margin, grid_n)
    theta = np.linspace(-np.pi, np.pi, grid_n)
    P, T = np.meshgrid(phi, theta, indexing="ij")
    if density_fn is None:
        F = hydro.dL_density_chart(chart, P, T, cfg.mu)
    else:
        F = density_fn(manifold.chart_to_shape(chart, P, T, cfg.mu))
    if F.min() > 0.0 or F.max() < 0.0:
        raise NoSignChange("density has constant sign on the scanned chart")

    contours = measure.find_contours(F, 0.0)
    polylines = _stitch_contours(contours, phi, theta)
    if not polylines:
        raise NoSignChange("no zero contour found")

    candidates = []
    for pl in polylines:
        if len(pl) < 8:
            continue
        gap_theta = (pl[-1, 0] - pl[0, 0]) % (2.0 * np.pi)
        gap_theta = min(gap_theta, 2.0 * np.pi - gap_theta)
        if np.hypot(gap_theta, pl[-1, 1] - pl[0, 1]) > 0.15:
            continue  # exits through the phi margin; not a closed stroke
        alpha, beta, winding = _fit_periodic_spline(pl, p)
        s = SplineStroke(alpha=alpha, beta=beta, chart=chart, winding=winding)
        m = metrics(evaluate(s, n_eval, cfg))
        if m.displacement < 0.0:
            s = s.reversed()
            m = metrics(evaluate(s, n_eval, cfg))
        candidates.append((abs(m.displacement), s, pl))
    if not candidates:
        raise NoSignChange("no usable zero contour found")
    candidates.sort(key=lambda c: -c[0])
    _, best, pl = candidates[0]
    return LevelSetResult(
        stroke=best,
        n_components=len(candidates),
        disconnected=len(candidates) > 1,
        polyline=pl,
    )


# --- serialization and exports ----------------------------------------------

def stroke_to_json(stroke: SplineStroke, mu: float) -> str:
    payload = {
        "schema_version": STROKE_SCHEMA_VERSION,
        "mu": mu,
        "p": stroke.p,
        "alpha": stroke.alpha.tolist(),
        "beta": stroke.beta.tolist(),
        "chart_convention": stroke.chart.value,
        "winding": stroke.winding,
    }
    return json.dumps(payload, indent=2)


def stroke_from_json(text: str):
    payload = json.loads(text)
    stroke = SplineStroke(
        alpha=np.array(payload["alpha"], dtype=float),
        beta=np.array(payload["beta"], dtype=float),
        chart=ChartId(payload["chart_convention"]),
        winding=int(payload.get("winding", 0)),
    )
    return stroke, float(payload["mu"])


def trajectory_csv(traj: Trajectory, path):
    """Write trajectory samples as CSV columns (t, s1, s2, s3, r)."""
    r = traj.displacement_profile
    if r is None:
        rdot = hydro.one_form(traj.shapes, traj.velocities)
        r = np.concatenate([[0.0], cumulative_trapezoid(rdot, traj.t)])
    rows = np.column_stack([traj.t, traj.shapes, r])
    np.savetxt(path, rows, delimiter=",", header="t,s1,s2,s3,r", comments="")


def shape_gallery_csv(traj: Trajectory, n_shapes: int, n_boundary: int, path):
    """Boundary curves of time-equidistributed shapes along a stroke."""
    idx = np.linspace(0, traj.n, n_shapes, endpoint=False).astype(int)
    rows = []
    for k in idx:
        t_b, pts = manifold.boundary_points(traj.shapes[k], n_boundary)
        tk = np.full_like(t_b, traj.t[k])
        rows.append(np.column_stack([tk, t_b, pts.real, pts.imag]))
    np.savetxt(path, np.concatenate(rows), delimiter=",",
               header="t_stroke,t_boundary,x,y", comments="")

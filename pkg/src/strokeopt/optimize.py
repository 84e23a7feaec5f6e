"""Stroke optimization: the five problems and their value-function sweeps.

Strokes are optimized over free periodic-spline coefficients anchored at the
basepoint (the t=0 interpolation condition is eliminated exactly).  Equality
and budget constraints are handled by an augmented Lagrangian with BFGS inner
solves and forward-difference gradients; a geodesic-cap state constraint (the
manifold "hole") enters as a smooth penalty plus a hard feasibility check.
"""

from __future__ import annotations

import enum
import json
import os
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from . import hydro, manifold, stroke as stroke_mod
from .errors import ConfigError, Infeasible
from .manifold import ChartCoord, ChartId, SwimmerConfig
from .stroke import SplineStroke, StrokeMetrics, Trajectory

_FD_STEP = 1e-6


class ProblemKind(enum.Enum):
    MIN_LENGTH = "min_length"
    MIN_ACTION = "min_action"
    MIN_TIME = "min_time"
    MAX_DIST_LENGTH = "max_dist_length"
    MAX_DIST_ACTION = "max_dist_action"


_MAXIMIZING = {ProblemKind.MAX_DIST_LENGTH, ProblemKind.MAX_DIST_ACTION}


@dataclass(frozen=True)
class ForbiddenRegion:
    """Geodesic cap removed from the shape manifold (state constraint)."""

    center: ChartCoord
    radius: float
    penalty_weight: float = 200.0

    def center_shape(self, mu: float):
        return manifold.coord_to_shape(self.center, mu)


@dataclass(frozen=True)
class ProblemSpec:
    kind: ProblemKind
    basepoint: np.ndarray
    delta: float | None = None     # target displacement (minimizing kinds)
    budget: float | None = None    # length or action budget (maximizing kinds)
    T: float = 1.0
    region: ForbiddenRegion | None = None

    def __post_init__(self):
        object.__setattr__(self, "basepoint", np.asarray(self.basepoint, dtype=float))
        if self.kind in (ProblemKind.MIN_LENGTH, ProblemKind.MIN_ACTION,
                         ProblemKind.MIN_TIME):
            if self.delta is None or not np.isfinite(self.delta):
                raise ConfigError("minimizing problems need a finite delta")
        else:
            if self.budget is None or self.budget < 0.0:
                raise ConfigError("maximizing problems need a nonnegative budget")
        if self.T <= 0.0:
            raise ConfigError("T must be positive")


@dataclass
class SolverOptions:
    starts: int = 16
    seed: int = 0
    p: int = 10
    n_quad: int = 256
    n_report: int = 2048
    ctol: float = 1e-6
    ctol_coarse: float = 1e-3
    gtol: float = 1e-7
    maxiter: int = 120
    al_iterations: int = 8
    rho0: float = 10.0
    rho_growth: float = 10.0
    phi_weight: float = 100.0
    amp_low: float = 0.1
    amp_high: float = 2.0
    theta_offset: float = 0.0
    region_pad: float = 0.01
    threads: int = 1


@dataclass
class SolveResult:
    stroke: SplineStroke
    metrics: StrokeMetrics          # of the constant-speed renormalization
    raw_metrics: StrokeMetrics      # of the optimizer's own parameterization
    value: float
    converged: bool
    constraint_residual: float
    best_start: int
    starts_tried: int
    per_start: list = field(default_factory=list)
    trajectory: Trajectory | None = None


@dataclass
class SweepResult:
    kind: str
    grid: np.ndarray
    value: np.ndarray
    converged: np.ndarray
    saturation_residual: np.ndarray
    strokes: list
    multistart_best_of: int


def _simpson_weights(n: int):
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w / (3.0 * n)


class _Workspace:
    """Precomputed basis/quadrature data and the coefficient embedding."""

    def __init__(self, spec: ProblemSpec, cfg: SwimmerConfig, opts: SolverOptions):
        self.spec = spec
        self.cfg = cfg
        self.opts = opts
        p, n = opts.p, opts.n_quad
        t = np.linspace(0.0, 1.0, n + 1)
        self.B = stroke_mod.basis_matrix(t, p)
        self.D = stroke_mod.basis_derivative_matrix(t, p)
        self.w_quad = _simpson_weights(n)

        base = manifold.project_to_manifold(spec.basepoint, cfg.mu)
        self.base_chart = manifold.chart_from_shape(base, cfg.mu)
        self.theta0 = self.base_chart.theta - opts.theta_offset
        self.phi0 = self.base_chart.phi
        self.p = p
        self.dim = 2 * (p - 1)

        if spec.region is not None:
            c = spec.region.center_shape(cfg.mu)
            w = c / (cfg.mu / np.sqrt(manifold.ELLIPSOID_WEIGHTS))
            self.region_axis = w / np.linalg.norm(w)
            base_w = base / (cfg.mu / np.sqrt(manifold.ELLIPSOID_WEIGHTS))
            base_w /= np.linalg.norm(base_w)
            gap = np.arccos(np.clip(base_w @ self.region_axis, -1.0, 1.0))
            if gap < spec.region.radius + 0.05:
                raise ConfigError(
                    f"basepoint is {gap:.3f} rad from the hole center; needs "
                    f">= radius + 0.05 = {spec.region.radius + 0.05:.3f}"
                )
        else:
            self.region_axis = None

    # -- coefficient embedding (t=0 interpolation eliminated exactly) -------
    #
    # The basis value at t=0 weights coefficients (p-1, 0, 1) by
    # (1/6, 4/6, 1/6); eliminating the centre coefficient keeps the derived
    # value within the box bounds whenever the basepoint phi sits in the
    # middle band [pi/3, 2pi/3].

    def expand(self, X):
        """Free vectors (dim, m) -> full (alpha, beta) coefficient matrices."""
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[0] != self.dim:
            raise ValueError(f"expected shape ({self.dim}, m)")
        m = X.shape[1]
        p = self.p
        alpha = np.empty((p, m))
        beta = np.empty((p, m))
        alpha[1:] = X[: p - 1]
        beta[1:] = X[p - 1:]
        alpha[0] = 1.5 * self.theta0 - 0.25 * (alpha[p - 1] + alpha[1])
        beta[0] = 1.5 * self.phi0 - 0.25 * (beta[p - 1] + beta[1])
        return alpha, beta

    def to_vector(self, s: SplineStroke):
        alpha = s.alpha - self.opts.theta_offset
        return np.concatenate([alpha[1:], s.beta[1:]])

    def bounds(self):
        """Box bounds: theta free, phi coefficients in [0, pi].

        By the convex-hull property of B-splines the bounded coefficients
        keep phi(t) in [0, pi] exactly, so the chart window never clamps.
        Only usable when the derived coefficient cannot leave the box.
        """
        if not np.pi / 3.0 <= self.phi0 <= 2.0 * np.pi / 3.0:
            return None
        p = self.p
        lo = np.concatenate([np.full(p - 1, -np.inf), np.zeros(p - 1)])
        hi = np.concatenate([np.full(p - 1, np.inf), np.full(p - 1, np.pi)])
        return list(zip(lo, hi))

    def to_stroke(self, x):
        alpha, beta = self.expand(np.asarray(x, dtype=float)[:, None])
        return SplineStroke(
            alpha=alpha[:, 0] + self.opts.theta_offset,
            beta=beta[:, 0],
            chart=self.base_chart.chart,
        )

    # -- batched evaluation ---------------------------------------------------

    def evaluate(self, X):
        """Quadrature quantities for a batch of free vectors (columns).

        Inline elementwise formulas (no stacked vectors/matrices): this is the
        optimizer's hot path, called once per line-search step and once per
        forward-difference gradient batch.
        """
        alpha, beta = self.expand(X)
        theta = self.B @ alpha + self.opts.theta_offset
        dtheta = self.D @ alpha
        phi = self.B @ beta
        dphi = self.D @ beta

        mu = self.cfg.mu
        sp, cp = np.sin(phi), np.cos(phi)
        st, ct = np.sin(theta), np.cos(theta)
        r2, r3 = 1.0 / np.sqrt(2.0), 1.0 / np.sqrt(3.0)
        if self.base_chart.chart is ChartId.POLAR_Z:
            s1 = mu * sp * ct
            s2 = mu * r2 * sp * st
            s3 = mu * r3 * cp
            v1 = mu * (cp * ct * dphi - sp * st * dtheta)
            v2 = mu * r2 * (cp * st * dphi + sp * ct * dtheta)
            v3 = -mu * r3 * sp * dphi
        else:
            s1 = mu * cp
            s2 = mu * r2 * sp * st
            s3 = mu * r3 * sp * ct
            v1 = -mu * sp * dphi
            v2 = mu * r2 * (cp * st * dphi + sp * ct * dtheta)
            v3 = mu * r3 * (cp * ct * dphi - sp * st * dtheta)

        mr = 2.0 - 2.0 * s1
        n1 = s2 * (-3.0 + 2.0 * s1 + 3.0 * s3)
        n2 = -s1 - 4.0 * s3 + s1 * s1 + 3.0 * s1 * s3
        n3 = s2 * (-2.0 + 3.0 * s1)
        d11 = 4.0 * s2 * s2 - 3.0 * s3 + 4.5 * s3 * s3 + 1.0
        d12 = 2.0 * s1 * s2 + 6.0 * s2 * s3
        d13 = 4.0 * s2 * s2 - 0.5 * s1 + 1.5 * s1 * s3
        d22 = s1 * s1 + 6.0 * s1 * s3 + 9.0 * s3 * s3 + 2.0 / 3.0
        d33 = 4.0 * s2 * s2 + 0.5 * s1 * s1 + 0.5

        nv = n1 * v1 + n2 * v2 + n3 * v3
        rdot = -nv / mr
        q = (d11 * v1 * v1 + d22 * v2 * v2 + d33 * v3 * v3
             + 2.0 * (d12 * v1 * v2 + d13 * v1 * v3 + d12 * v2 * v3)
             - nv * nv / mr)
        v = np.sqrt(q + 1e-18)

        w = self.w_quad
        disp = w @ rdot
        length = w @ v
        action = (w @ q) / (2.0 * self.spec.T)

        over = np.maximum(phi - np.pi, 0.0) + np.maximum(-phi, 0.0)
        c_phi = w @ (over * over)

        if self.region_axis is not None:
            ax = self.region_axis
            cosang = (s1 * ax[0] + np.sqrt(2.0) * s2 * ax[1]
                      + np.sqrt(3.0) * s3 * ax[2]) / mu
            ang = np.arccos(np.clip(cosang, -1.0, 1.0))
            pen = np.maximum(
                self.spec.region.radius + self.opts.region_pad - ang, 0.0
            )
            c_reg = w @ (pen * pen)
            min_ang = ang.min(axis=0)
        else:
            c_reg = np.zeros_like(disp)
            min_ang = np.full_like(disp, np.inf)

        return {
            "disp": disp, "length": length, "action": action,
            "c_phi": c_phi, "c_reg": c_reg, "min_angle": min_ang,
            "max_over": over.max(axis=0),
        }


def _invariant_action(ev, T):
    # infimum of the action over time reparameterizations of the same curve
    # (the Cauchy-Schwarz equality case); the returned stroke is renormalized
    # to constant speed and attains it exactly
    return ev["length"] * ev["length"] / (2.0 * T)


def _objective_and_constraint(kind: ProblemKind, spec: ProblemSpec, ev):
    if kind in (ProblemKind.MIN_LENGTH, ProblemKind.MIN_TIME):
        return ev["length"], ev["disp"] - spec.delta, True
    if kind is ProblemKind.MIN_ACTION:
        return _invariant_action(ev, spec.T), ev["disp"] - spec.delta, True
    if kind is ProblemKind.MAX_DIST_LENGTH:
        return -ev["disp"], ev["length"] - spec.budget, False
    if kind is ProblemKind.MAX_DIST_ACTION:
        return -ev["disp"], _invariant_action(ev, spec.T) - spec.budget, False
    raise ValueError(kind)


class _AugmentedLagrangian:
    def __init__(self, ws: _Workspace):
        self.ws = ws
        self.spec = ws.spec
        self.opts = ws.opts
        self.region_boost = 1.0
        self.bounds = ws.bounds()

    def _minimize(self, fun, jac, x, maxiter, gtol):
        if self.bounds is not None:
            return minimize(fun, x, jac=jac, method="L-BFGS-B",
                            bounds=self.bounds,
                            options={"maxiter": maxiter, "ftol": 1e-14,
                                     "gtol": gtol})
        return minimize(fun, x, jac=jac, method="BFGS",
                        options={"gtol": gtol, "maxiter": maxiter,
                                 "xrtol": 1e-10})

    def merit(self, ev, lam, rho):
        obj, c, is_eq = _objective_and_constraint(self.spec.kind, self.spec, ev)
        if is_eq:
            m = obj + lam * c + 0.5 * rho * c * c
        else:
            shifted = np.maximum(0.0, lam + rho * c)
            m = obj + (shifted * shifted - lam * lam) / (2.0 * rho)
        m = m + self.opts.phi_weight * ev["c_phi"]
        if self.spec.region is not None:
            m = m + self.region_boost * self.spec.region.penalty_weight * ev["c_reg"]
        return m

    def run(self, x0):
        ws, opts = self.ws, self.opts
        x0 = np.asarray(x0, dtype=float)
        lam, rho = 0.0, opts.rho0
        if self.spec.kind in _MAXIMIZING:
            # near-saturated starts (warm continuations): bind the budget from
            # round 0 with a marginal-value multiplier and a stiff penalty,
            # otherwise BFGS runs far along the objective and hops basins.
            # Slack starts keep the soft schedule so exploration still works.
            ev0 = ws.evaluate(x0[:, None])
            _, c0, _ = _objective_and_constraint(self.spec.kind, self.spec, ev0)
            scale = max(abs(self.spec.budget), 0.1)
            if float(c0[0]) > -0.15 * scale:
                lam, rho = 0.15, max(opts.rho0, 100.0)
        x = x0.copy()
        prev_c = np.inf
        n_iters = 0
        needs_disp = self.spec.kind not in _MAXIMIZING and self.spec.delta != 0.0
        for it in range(opts.al_iterations):
            def fun(x_, lam=lam, rho=rho):
                return float(self.merit(ws.evaluate(x_[:, None]), lam, rho)[0])

            def jac(x_, lam=lam, rho=rho):
                m0 = self.merit(ws.evaluate(x_[:, None]), lam, rho)[0]
                X = x_[:, None] + _FD_STEP * np.eye(len(x_))
                mv = self.merit(ws.evaluate(X), lam, rho)
                return (mv - m0) / _FD_STEP

            # early multiplier rounds only need coarse inner solves
            inner_max = min(opts.maxiter, 40 + 40 * it)
            inner_gtol = opts.gtol if it >= 2 else 1e-4
            res = self._minimize(fun, jac, x, inner_max, inner_gtol)
            x = res.x
            n_iters += res.nit
            ev = ws.evaluate(x[:, None])
            _, c, is_eq = _objective_and_constraint(self.spec.kind, self.spec, ev)
            c = float(c[0])
            # inequality: the projected residual max(c, -lam/rho) also drives
            # complementary slackness (plain max(c,0) would declare victory
            # for any under-saturated iterate)
            viol = c if is_eq else max(c, -lam / rho)
            if abs(viol) < opts.ctol:
                break
            if is_eq:
                lam += rho * c
            else:
                lam = max(0.0, lam + rho * c)
            if abs(viol) > 0.25 * abs(prev_c):
                rho *= opts.rho_growth
            prev_c = viol
            # the constant stroke is a degenerate critical point of the merit;
            # a collapsed iterate escapes it only with the updated multipliers,
            # so restart it from the original draw
            if needs_disp and float(ev["length"][0]) < 1e-4:
                x = x0.copy()

        # grazing finish: the squared hinge is nearly free at shallow
        # penetration, so a winner can sit a hair inside the cap; project the
        # offending samples out geometrically, refit, and re-polish once
        if self.spec.region is not None:
            for _ in range(2):
                ev = ws.evaluate(x[:, None])
                if float(ev["min_angle"][0]) >= self.spec.region.radius:
                    break
                x = _project_out_of_region(ws, x)
                self.region_boost = 20.0
                try:
                    def fun_b(x_, lam=lam, rho=rho):
                        return float(self.merit(ws.evaluate(x_[:, None]), lam, rho)[0])

                    def jac_b(x_, lam=lam, rho=rho):
                        m0 = self.merit(ws.evaluate(x_[:, None]), lam, rho)[0]
                        X = x_[:, None] + _FD_STEP * np.eye(len(x_))
                        return (self.merit(ws.evaluate(X), lam, rho) - m0) / _FD_STEP

                    res = self._minimize(fun_b, jac_b, x, 60, opts.gtol)
                    n_iters += res.nit
                    if float(ws.evaluate(res.x[:, None])["min_angle"][0]) \
                            >= self.spec.region.radius:
                        x = res.x
                finally:
                    self.region_boost = 1.0

        ev = ws.evaluate(x[:, None])
        obj, c, is_eq = _objective_and_constraint(self.spec.kind, self.spec, ev)
        viol = float(c[0]) if is_eq else max(float(c[0]), 0.0)
        return {
            "x": x,
            "objective": float(obj[0]),
            "residual": abs(viol),
            "max_over": float(ev["max_over"][0]),
            "min_angle": float(ev["min_angle"][0]),
            "iterations": n_iters,
        }


def _project_out_of_region(ws: _Workspace, x):
    """Slerp cap-penetrating samples onto the padded boundary and refit."""
    spec, opts = ws.spec, ws.opts
    alpha, beta = ws.expand(x[:, None])
    m = 256
    u = np.arange(m) / m
    B = stroke_mod.basis_matrix(u, ws.p)
    theta = (B @ alpha)[:, 0] + opts.theta_offset
    phi = (B @ beta)[:, 0]

    sp_, cp = np.sin(phi), np.cos(phi)
    st_, ct = np.sin(theta), np.cos(theta)
    w = np.stack([sp_ * ct, sp_ * st_, cp], axis=-1)
    if ws.base_chart.chart is ChartId.POLAR_X:
        w = np.stack([cp, sp_ * st_, sp_ * ct], axis=-1)
    axis = ws.region_axis
    cosang = np.clip(w @ axis, -1.0, 1.0)
    ang = np.arccos(cosang)
    target = spec.region.radius + opts.region_pad
    mask = ang < target
    if not np.any(mask):
        return x
    # rotate offending points away from the axis to the padded boundary
    perp = w[mask] - cosang[mask, None] * axis
    norms = np.linalg.norm(perp, axis=1, keepdims=True)
    perp = perp / np.maximum(norms, 1e-12)
    w_new = np.cos(target) * axis + np.sin(target) * perp
    if ws.base_chart.chart is ChartId.POLAR_Z:
        phi_new = np.arccos(np.clip(w_new[:, 2], -1.0, 1.0))
        theta_new = np.arctan2(w_new[:, 1], w_new[:, 0])
    else:
        phi_new = np.arccos(np.clip(w_new[:, 0], -1.0, 1.0))
        theta_new = np.arctan2(w_new[:, 1], w_new[:, 2])
    # keep the unwrapped theta branch closest to the original path
    theta_new += 2.0 * np.pi * np.round((theta[mask] - theta_new) / (2.0 * np.pi))
    phi[mask] = phi_new
    theta[mask] = theta_new

    alpha_fit, *_ = np.linalg.lstsq(B, theta - opts.theta_offset, rcond=None)
    beta_fit, *_ = np.linalg.lstsq(B, phi, rcond=None)
    if ws.bounds() is not None:
        beta_fit = np.clip(beta_fit, 0.0, np.pi)
    return np.concatenate([alpha_fit[1:], beta_fit[1:]])


def _initial_vectors(ws: _Workspace, rng_seed, opts: SolverOptions):
    """Random coefficient draws rescaled to target loop lengths."""
    draws = []
    for k in range(opts.starts):
        rng = np.random.default_rng(np.random.SeedSequence((rng_seed, k)))
        g = rng.normal(size=ws.dim)
        target = np.exp(rng.uniform(np.log(opts.amp_low), np.log(opts.amp_high)))
        x = np.zeros(ws.dim)
        x[: ws.p - 1] = ws.theta0
        x[ws.p - 1:] = ws.phi0
        amp = 0.3
        for _ in range(2):
            cand = x + amp * g
            length = float(ws.evaluate(cand[:, None])["length"][0])
            if length > 1e-9:
                amp *= target / length
        draws.append(x + amp * g)
    draws.extend(_region_encircling_vectors(ws))
    return draws


def _region_encircling_vectors(ws: _Workspace):
    """Deterministic starts that loop around the forbidden cap.

    With an obstacle on the manifold the interesting branch encircles it;
    random draws near the basepoint rarely find that basin on their own.
    """
    spec = ws.spec
    if spec.region is None or spec.region.center.chart is not ws.base_chart.chart:
        return []
    phi_c = spec.region.center.phi
    theta_c = spec.region.center.theta - ws.opts.theta_offset
    sin_c = max(np.sin(phi_c), 0.2)
    out = []
    m = 128
    u = np.arange(m) / m
    B = stroke_mod.basis_matrix(u, ws.p)
    for pad in (0.12, 0.3):
        a_phi = spec.region.radius + pad
        a_theta = (spec.region.radius + pad) / sin_c
        if phi_c - a_phi < 0.05 or phi_c + a_phi > np.pi - 0.05:
            continue
        phase = np.arctan2((ws.theta0 - theta_c) * sin_c, ws.phi0 - phi_c)
        ang = 2.0 * np.pi * u + phase
        phi_s = phi_c + a_phi * np.cos(ang)
        theta_s = theta_c + a_theta * np.sin(ang)
        alpha, *_ = np.linalg.lstsq(B, theta_s, rcond=None)
        beta, *_ = np.linalg.lstsq(B, phi_s, rcond=None)
        out.append(np.concatenate([alpha[1:], beta[1:]]))
    return out


def _hard_feasible(ws: _Workspace, rec) -> bool:
    if rec["max_over"] > 1e-9:
        return False
    if ws.spec.region is not None and rec["min_angle"] < ws.spec.region.radius:
        return False
    return True


def solve(spec: ProblemSpec, cfg: SwimmerConfig, opts: SolverOptions | None = None,
          warm_strokes: list | None = None) -> SolveResult:
    """Multistart augmented-Lagrangian solve of one stroke problem.

    Returns the best feasible stroke; metrics are reported for the
    constant-speed renormalization of the winner (the optimal-parameterization
    representative), alongside the raw parameterization metrics.
    """
    opts = opts or SolverOptions()
    if spec.kind is ProblemKind.MIN_TIME:
        spec = replace(spec, kind=ProblemKind.MIN_LENGTH)

    # degenerate target: the constant stroke is optimal
    if spec.kind in (ProblemKind.MIN_LENGTH, ProblemKind.MIN_ACTION) \
            and spec.delta == 0.0:
        return _trivial_result(spec, cfg, opts)
    if spec.kind in _MAXIMIZING and spec.budget == 0.0:
        return _trivial_result(spec, cfg, opts)

    ws = _Workspace(spec, cfg, opts)
    al = _AugmentedLagrangian(ws)

    fresh = _initial_vectors(ws, opts.seed, opts)
    warms = []
    for s in warm_strokes or []:
        try:
            warms.append(ws.to_vector(s))
        except Exception:
            continue

    if spec.kind in _MAXIMIZING and spec.budget > 0.0:
        # maximizers saturate their budget (Theorem-4 structure), so fresh
        # starts are rescaled onto the budget surface: the multiplier binds
        # from round 0 and exploration happens in shape space at the right
        # length scale.  Warm strokes keep their raw copy too: rescaling
        # toward the basepoint can drag an obstacle-encircling loop through
        # the forbidden cap.
        x_const = np.concatenate([np.full(opts.p - 1, ws.theta0),
                                  np.full(opts.p - 1, ws.phi0)])

        def scale_to_budget(x):
            ev = ws.evaluate(x[:, None])
            cost = float((ev["length"] if spec.kind is ProblemKind.MAX_DIST_LENGTH
                          else _invariant_action(ev, spec.T))[0])
            if cost <= 1e-9:
                return x
            kappa = (spec.budget / cost
                     if spec.kind is ProblemKind.MAX_DIST_LENGTH
                     else np.sqrt(spec.budget / cost))
            return x_const + np.clip(kappa, 0.2, 5.0) * (x - x_const)

        x0s = [scale_to_budget(x) for x in fresh]
        labels = [f"fresh{k}" for k in range(len(fresh))]
        for i, x in enumerate(warms):
            x0s += [x, scale_to_budget(x)]
            labels += [f"warm{i}", f"warm{i}s"]
    else:
        x0s = fresh + warms
        labels = [f"fresh{k}" for k in range(len(fresh))] \
            + [f"warm{i}" for i in range(len(warms))]

    if ws.bounds() is not None:
        p1 = opts.p - 1
        x0s = [np.concatenate([x[:p1], np.clip(x[p1:], 0.0, np.pi)])
               for x in x0s]

    if opts.threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=opts.threads) as ex:
            records = list(ex.map(al.run, x0s))
    else:
        records = [al.run(x0) for x0 in x0s]

    per_start = [
        {"label": lab, "objective": r["objective"], "residual": r["residual"],
         "iterations": r["iterations"], "hard_feasible": _hard_feasible(ws, r)}
        for lab, r in zip(labels, records)
    ]

    best_idx, best_key = None, None
    for i, r in enumerate(records):
        if not _hard_feasible(ws, r):
            continue
        tier = 0 if r["residual"] <= opts.ctol else \
            (1 if r["residual"] <= opts.ctol_coarse else 2)
        if tier == 2:
            continue
        key = (tier, r["objective"])
        if best_key is None or key < best_key:
            best_key, best_idx = key, i

    if best_idx is None:
        raise Infeasible(
            f"no start reached constraint residual < {opts.ctol_coarse}",
            diagnostics=per_start,
        )

    winner = records[best_idx]
    strk = ws.to_stroke(winner["x"])
    traj = stroke_mod.evaluate(strk, opts.n_report, cfg, constant_speed=True)
    raw = stroke_mod.metrics(stroke_mod.evaluate(strk, opts.n_report, cfg), spec.T)
    # displacement and length are parameterization invariant, so take them
    # from the raw clock (better conditioned); the constant-speed
    # renormalization pins the action to the Cauchy-Schwarz equality case
    met = StrokeMetrics(
        displacement=raw.displacement,
        length=raw.length,
        action=raw.length**2 / (2.0 * spec.T),
        max_speed=raw.length / spec.T,
        min_speed=raw.length / spec.T,
    )

    if spec.kind is ProblemKind.MIN_LENGTH:
        value = met.length
    elif spec.kind is ProblemKind.MIN_ACTION:
        value = met.action
    else:
        value = met.displacement

    return SolveResult(
        stroke=strk,
        metrics=met,
        raw_metrics=raw,
        value=float(value),
        converged=winner["residual"] <= opts.ctol,
        constraint_residual=winner["residual"],
        best_start=best_idx,
        starts_tried=len(x0s),
        per_start=per_start,
        trajectory=traj,
    )


def _trivial_result(spec, cfg, opts):
    ws = _Workspace(spec, cfg, opts)
    strk = SplineStroke(
        alpha=np.full(opts.p, ws.theta0 + opts.theta_offset),
        beta=np.full(opts.p, ws.phi0),
        chart=ws.base_chart.chart,
    )
    traj = stroke_mod.evaluate(strk, opts.n_report, cfg)
    met = stroke_mod.metrics(traj, spec.T)
    return SolveResult(
        stroke=strk, metrics=met, raw_metrics=met, value=0.0, converged=True,
        constraint_residual=0.0, best_start=0, starts_tried=0, per_start=[],
        trajectory=traj,
    )


@dataclass
class MinTimeResult:
    T: float
    stroke: SplineStroke
    solve_result: SolveResult


def min_time(delta: float, basepoint, cfg: SwimmerConfig,
             opts: SolverOptions | None = None,
             region: ForbiddenRegion | None = None) -> MinTimeResult:
    """Minimal time at unit speed; equals the minimal stroke length.

    The returned stroke, traversed at constant unit speed, takes exactly
    T = minimal length.
    """
    spec = ProblemSpec(kind=ProblemKind.MIN_LENGTH, basepoint=basepoint,
                       delta=delta, region=region)
    res = solve(spec, cfg, opts)
    return MinTimeResult(T=res.metrics.length, stroke=res.stroke, solve_result=res)


# --- value-function sweeps ---------------------------------------------------

def _sweep(kind: ProblemKind, grid, basepoint, cfg, opts, region=None,
           passes: int = 3):
    grid = np.asarray(grid, dtype=float)
    if np.any(np.diff(grid) < 0.0):
        raise ConfigError("sweep grid must be sorted ascending")
    n = len(grid)
    results: list[SolveResult | None] = [None] * n

    def point_spec(g):
        if kind in (ProblemKind.MIN_LENGTH, ProblemKind.MIN_ACTION):
            return ProblemSpec(kind=kind, basepoint=basepoint, delta=float(g),
                               region=region)
        return ProblemSpec(kind=kind, basepoint=basepoint, budget=float(g),
                           region=region)

    # alternating passes trace branches both ways, so a branch discovered at
    # one grid point propagates to its whole plateau
    order_passes = [range(n) if k % 2 == 0 else range(n - 1, -1, -1)
                    for k in range(max(1, passes))]
    for pass_no, order in enumerate(order_passes):
        prev: SolveResult | None = None
        for i in order:
            warm = []
            if prev is not None:
                warm.append(prev.stroke)
            if results[i] is not None:
                warm.append(results[i].stroke)
            o = replace(opts, seed=opts.seed + 1000 * pass_no + i)
            try:
                r = solve(point_spec(grid[i]), cfg, o, warm_strokes=warm)
            except Infeasible:
                r = None
            if r is not None:
                cur = results[i]
                better = cur is None or _sweep_key(kind, r) < _sweep_key(kind, cur)
                if better:
                    results[i] = r
            prev = results[i]

    if kind in _MAXIMIZING:
        _repair_monotone(kind, grid, results, point_spec, cfg, opts)
    return grid, results


def _repair_monotone(kind, grid, results, point_spec, cfg, opts,
                     rounds: int = 3, tol: float = 1e-4):
    """Re-solve sweep points that break the monotonicity of the sup.

    A maximizer for a smaller budget is feasible for every larger one, so a
    dip certifies that the point missed its branch; warm-starting from the
    offending neighbours repairs it.
    """
    n = len(grid)
    for round_no in range(rounds):
        repaired = False
        for i in range(n):
            if results[i] is None:
                continue
            left = results[i - 1] if i > 0 and results[i - 1] is not None else None
            right = results[i + 1] if i + 1 < n and results[i + 1] is not None else None
            bad = (left is not None and results[i].value < left.value - tol)
            if not bad:
                continue
            warm = [r.stroke for r in (left, right) if r is not None]
            o = replace(opts, seed=opts.seed + 7000 + 1000 * round_no + i)
            try:
                r = solve(point_spec(grid[i]), cfg, o, warm_strokes=warm)
            except Infeasible:
                continue
            if _sweep_key(kind, r) < _sweep_key(kind, results[i]):
                results[i] = r
                repaired = True
        if not repaired:
            break


def _sweep_key(kind, r: SolveResult):
    sign = 1.0 if kind not in _MAXIMIZING else -1.0
    return (not r.converged, sign * r.value)


def _pack_sweep(kind_name, kind, grid, results, opts, budget_metric=None):
    n = len(grid)
    value = np.full(n, np.nan)
    converged = np.zeros(n, dtype=bool)
    sat = np.full(n, np.nan)
    strokes = []
    for i, r in enumerate(results):
        if r is None:
            strokes.append(None)
            continue
        value[i] = r.value
        converged[i] = r.converged
        if budget_metric is not None:
            sat[i] = abs(budget_metric(r) - grid[i])
        else:
            sat[i] = r.constraint_residual
        strokes.append(r.stroke)
    return SweepResult(
        kind=kind_name, grid=np.asarray(grid, dtype=float), value=value,
        converged=converged, saturation_residual=sat, strokes=strokes,
        multistart_best_of=opts.starts,
    )


def sweep_phi(delta_grid, basepoint, cfg: SwimmerConfig,
              opts: SolverOptions | None = None) -> SweepResult:
    """Minimal stroke length for each target displacement (warm-started)."""
    opts = opts or SolverOptions()
    grid, results = _sweep(ProblemKind.MIN_LENGTH, delta_grid, basepoint, cfg, opts)
    return _pack_sweep("phi", ProblemKind.MIN_LENGTH, grid, results, opts)


def sweep_psi(l_grid, basepoint, cfg: SwimmerConfig,
              opts: SolverOptions | None = None) -> SweepResult:
    """Maximal displacement under each length budget; saturation reported."""
    opts = opts or SolverOptions()
    grid, results = _sweep(ProblemKind.MAX_DIST_LENGTH, l_grid, basepoint, cfg, opts)
    return _pack_sweep("psi", ProblemKind.MAX_DIST_LENGTH, grid, results, opts,
                       budget_metric=lambda r: r.metrics.length)


def sweep_with_hole(delta_grid, region: ForbiddenRegion, basepoint,
                    cfg: SwimmerConfig,
                    opts: SolverOptions | None = None) -> SweepResult:
    """Phi sweep with the geodesic-cap constraint active."""
    opts = opts or SolverOptions()
    grid, results = _sweep(ProblemKind.MIN_LENGTH, delta_grid, basepoint, cfg,
                           opts, region=region)
    return _pack_sweep("phi_hole", ProblemKind.MIN_LENGTH, grid, results, opts)


def sweep_psi_with_hole(l_grid, region: ForbiddenRegion, basepoint,
                        cfg: SwimmerConfig,
                        opts: SolverOptions | None = None) -> SweepResult:
    opts = opts or SolverOptions()
    grid, results = _sweep(ProblemKind.MAX_DIST_LENGTH, l_grid, basepoint, cfg,
                           opts, region=region)
    return _pack_sweep("psi_hole", ProblemKind.MAX_DIST_LENGTH, grid, results,
                       opts, budget_metric=lambda r: r.metrics.length)


def duality_pair(budget: float, basepoint, cfg: SwimmerConfig,
                 opts: SolverOptions | None = None, rounds: int = 3):
    """Cross-seeded Psi(l) and Phi(Psi(l)) solves.

    Alternating warm starts drive the pair to a consistent optimum, which is
    how the saturation and inversion identities are checked numerically.
    """
    opts = opts or SolverOptions()
    psi_spec = ProblemSpec(kind=ProblemKind.MAX_DIST_LENGTH, basepoint=basepoint,
                           budget=budget)
    psi = solve(psi_spec, cfg, opts)
    phi = None
    for k in range(rounds):
        phi_spec = ProblemSpec(kind=ProblemKind.MIN_LENGTH, basepoint=basepoint,
                               delta=psi.metrics.displacement)
        o = replace(opts, seed=opts.seed + 17 * (k + 1))
        phi = solve(phi_spec, cfg, o, warm_strokes=[psi.stroke])
        if phi.value >= budget - 1e-5:
            break
        o2 = replace(opts, seed=opts.seed + 29 * (k + 1))
        psi_new = solve(psi_spec, cfg, o2, warm_strokes=[phi.stroke, psi.stroke])
        if psi_new.value <= psi.value + 1e-8:
            break
        psi = psi_new
    return psi, phi


# --- export ------------------------------------------------------------------

def atomic_write(path, text: str):
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def sweep_csv(result: SweepResult) -> str:
    lines = ["grid,value,converged,saturation_residual"]
    for g, v, c, s in zip(result.grid, result.value, result.converged,
                          result.saturation_residual):
        lines.append(f"{float(g)!r},{float(v)!r},{int(c)},{float(s)!r}")
    return "\n".join(lines) + "\n"


def save_sweep(result: SweepResult, out_dir, mu: float):
    os.makedirs(out_dir, exist_ok=True)
    atomic_write(os.path.join(out_dir, f"sweep_{result.kind}.csv"),
                 sweep_csv(result))
    for i, s in enumerate(result.strokes):
        if s is None:
            continue
        atomic_write(os.path.join(out_dir, f"stroke_{result.kind}_{i:04d}.json"),
                     stroke_mod.stroke_to_json(s, mu))

"""Command-line interface: controllability checks, solves, sweeps, level sets.

Exit codes are a stable contract: 0 success, 1 negative certificate (rank
deficiency), 2 bad configuration, 3 infeasible optimization, 4 structural
failure (no zero level set).  All artifacts are written atomically and every
command is deterministic for a fixed seed, including across --threads values.
"""

from __future__ import annotations

import json
import os
import sys
from dataclasses import replace

import click
import numpy as np

from . import geometry, hydro, manifold, optimize as opt, stroke as stroke_mod
from .errors import ConfigError, Infeasible, NoSignChange, StrokeOptError
from .manifold import ChartCoord, ChartId, SwimmerConfig

CONFIG_SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_RANK_DEFICIENT = 1
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_STRUCTURAL = 4


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _swimmer(mu: float) -> SwimmerConfig:
    try:
        return SwimmerConfig(mu=mu)
    except ConfigError as exc:
        _fail(EXIT_CONFIG, str(exc))


def _parse_grid(text: str):
    """Grid spec: either 'start:stop:num' or a comma-separated list."""
    if ":" in text:
        a, b, n = text.split(":")
        return np.linspace(float(a), float(b), int(n))
    return np.array([float(v) for v in text.split(",")])


def _parse_hole(center: str | None, radius: float | None, weight: float):
    if center is None and radius is None:
        return None
    if center is None or radius is None:
        raise ConfigError("--hole-center and --hole-radius go together")
    phi, theta = (float(v) for v in center.split(","))
    return opt.ForbiddenRegion(
        center=ChartCoord(ChartId.POLAR_Z, phi, theta),
        radius=radius,
        penalty_weight=weight,
    )


@click.group()
def main():
    """Stroke optimization for the planar potential-flow swimmer."""


@main.command("check-controllability")
@click.option("--mu", type=float, default=0.3, show_default=True)
@click.option("--point", type=str, default=None,
              help="state s1,s2,s3,r (default: (mu,0,0,0))")
@click.option("--depth", type=int, default=2, show_default=True)
def check_controllability(mu, point, depth):
    """Rank of the lifted fields and their brackets at a state."""
    if not 0.0 < mu < 1.0:
        _fail(EXIT_CONFIG, f"mu must lie in (0, 1), got {mu}")
    cfg = _swimmer(mu)
    if point is None:
        xi = np.array([mu, 0.0, 0.0, 0.0])
    else:
        xi = np.array([float(v) for v in point.split(",")])
        if xi.shape != (4,):
            _fail(EXIT_CONFIG, "--point needs four components s1,s2,s3,r")
        if abs(manifold.constraint_value(xi[:3]) - mu**2) > 1e-6:
            _fail(EXIT_CONFIG, "point is not on the shape ellipsoid")
        xi[:3] = manifold.project_to_manifold(xi[:3], cfg.mu)
    if not 1 <= depth <= 4:
        _fail(EXIT_CONFIG, "depth must lie in 1..4")

    full = 3  # dim of (ellipsoid x displacement line)
    final = 0
    for d in range(1, depth + 1):
        r = geometry.lie_rank(xi, d)
        click.echo(f"depth {d}: rank {r} / {full}")
        final = r
    sys.exit(EXIT_OK if final == full else EXIT_RANK_DEFICIENT)


_KIND_ALIASES = {k.value: k for k in opt.ProblemKind}


def _load_problem_file(path):
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("schema_version") != CONFIG_SCHEMA_VERSION:
        raise ConfigError("unsupported or missing schema_version")
    mu = float(payload.get("mu", 0.3))
    cfg = SwimmerConfig(mu=mu)
    kind = _KIND_ALIASES.get(payload.get("kind"))
    if kind is None:
        raise ConfigError(f"unknown problem kind {payload.get('kind')!r}")
    base = np.array(payload.get("basepoint", [mu, 0.0, 0.0]), dtype=float)
    region = None
    if "hole" in payload:
        h = payload["hole"]
        region = opt.ForbiddenRegion(
            center=ChartCoord(ChartId(h.get("chart", "polar_z")),
                              float(h["center_phi"]), float(h["center_theta"])),
            radius=float(h["radius"]),
            penalty_weight=float(h.get("penalty_weight", 200.0)),
        )
    spec = opt.ProblemSpec(
        kind=kind,
        basepoint=base,
        delta=payload.get("delta"),
        budget=payload.get("budget"),
        T=float(payload.get("T", 1.0)),
        region=region,
    )
    opts = opt.SolverOptions(
        starts=int(payload.get("starts", 16)),
        seed=int(payload.get("seed", 0)),
        p=int(payload.get("p", 10)),
    )
    return cfg, spec, opts


def _metrics_csv(res: opt.SolveResult) -> str:
    m, raw = res.metrics, res.raw_metrics
    lines = ["quantity,renormalized,raw"]
    for name in ("displacement", "length", "action", "max_speed", "min_speed"):
        lines.append(f"{name},{float(getattr(m, name))!r},{float(getattr(raw, name))!r}")
    lines.append(f"value,{float(res.value)!r},")
    lines.append(f"constraint_residual,{float(res.constraint_residual)!r},")
    lines.append(f"converged,{int(res.converged)},")
    return "\n".join(lines) + "\n"


@main.command("optimize")
@click.argument("spec_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(file_okay=False), required=True)
@click.option("--seed", type=int, default=None, help="override the file seed")
@click.option("--starts", type=int, default=None)
@click.option("--threads", type=int, default=1, show_default=True)
@click.option("--gallery", type=int, default=0,
              help="also export N time-equidistributed boundary shapes")
def optimize_cmd(spec_file, out, seed, starts, threads, gallery):
    """Solve one stroke problem from a JSON problem file."""
    try:
        cfg, spec, opts = _load_problem_file(spec_file)
    except (ConfigError, KeyError, ValueError, json.JSONDecodeError) as exc:
        _fail(EXIT_CONFIG, f"bad problem file: {exc}")
    if seed is not None:
        opts = replace(opts, seed=seed)
    if starts is not None:
        opts = replace(opts, starts=starts)
    opts = replace(opts, threads=threads)

    try:
        res = opt.solve(spec, cfg, opts)
    except Infeasible as exc:
        _fail(EXIT_INFEASIBLE, str(exc))
    except ConfigError as exc:
        _fail(EXIT_CONFIG, str(exc))

    os.makedirs(out, exist_ok=True)
    opt.atomic_write(os.path.join(out, "stroke.json"),
                     stroke_mod.stroke_to_json(res.stroke, cfg.mu))
    opt.atomic_write(os.path.join(out, "metrics.csv"), _metrics_csv(res))
    traj = res.trajectory
    stroke_mod.trajectory_csv(traj, os.path.join(out, "trajectory.csv"))
    if gallery > 0:
        stroke_mod.shape_gallery_csv(traj, gallery, 256,
                                     os.path.join(out, "gallery.csv"))
    click.echo(f"value {res.value!r}  displacement {res.metrics.displacement!r}  "
               f"length {res.metrics.length!r}  residual {res.constraint_residual:.3e}")
    sys.exit(EXIT_OK)


def _point_path(out, kind, i):
    return os.path.join(out, f"point_{kind}_{i:04d}.json")


def _save_point(out, kind, i, grid_value, res: opt.SolveResult, mu):
    payload = {
        "grid": float(grid_value),
        "value": res.value,
        "converged": bool(res.converged),
        "constraint_residual": res.constraint_residual,
        "length": res.metrics.length,
        "displacement": res.metrics.displacement,
        "stroke": json.loads(stroke_mod.stroke_to_json(res.stroke, mu)),
    }
    opt.atomic_write(_point_path(out, kind, i), json.dumps(payload, indent=2))


def _load_point(out, kind, i):
    path = _point_path(out, kind, i)
    if not os.path.exists(path):
        return None
    with open(path) as fh:
        payload = json.load(fh)
    strk, _ = stroke_mod.stroke_from_json(json.dumps(payload["stroke"]))
    return payload, strk


@main.command("sweep")
@click.argument("kind", type=click.Choice(["phi", "psi", "hole", "psi-hole"]))
@click.option("--grid", type=str, required=True,
              help="'start:stop:num' or comma-separated values")
@click.option("--mu", type=float, default=0.3, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--starts", type=int, default=16, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), required=True)
@click.option("--hole-center", type=str, default=None,
              help="'phi,theta' of the cap center (polar_z chart)")
@click.option("--hole-radius", type=float, default=None)
@click.option("--hole-weight", type=float, default=200.0, show_default=True)
@click.option("--threads", type=int, default=1, show_default=True)
@click.option("--resume", is_flag=True, default=False,
              help="reuse per-point artifacts already in --out")
def sweep_cmd(kind, grid, mu, seed, starts, out, hole_center, hole_radius,
              hole_weight, threads, resume):
    """Value-function sweep; one resumable artifact per grid point."""
    cfg = _swimmer(mu)
    try:
        grid_values = _parse_grid(grid)
        region = _parse_hole(hole_center, hole_radius, hole_weight)
    except (ConfigError, ValueError) as exc:
        _fail(EXIT_CONFIG, str(exc))
    if kind in ("hole", "psi-hole") and region is None:
        _fail(EXIT_CONFIG, f"sweep kind {kind!r} needs --hole-center/--hole-radius")

    base = np.array([mu, 0.0, 0.0])
    opts = opt.SolverOptions(starts=starts, seed=seed, threads=threads)
    problem_kind = (opt.ProblemKind.MIN_LENGTH if kind in ("phi", "hole")
                    else opt.ProblemKind.MAX_DIST_LENGTH)
    use_region = region if kind in ("hole", "psi-hole") else None

    os.makedirs(out, exist_ok=True)
    preloaded = {}
    if resume:
        for i in range(len(grid_values)):
            loaded = _load_point(out, kind, i)
            if loaded is not None:
                preloaded[i] = loaded

    try:
        result = _resumable_sweep(problem_kind, grid_values, base, cfg, opts,
                                  use_region, preloaded,
                                  lambda i, g, r: _save_point(out, kind, i, g, r, mu))
    except ConfigError as exc:
        _fail(EXIT_CONFIG, str(exc))
    result = replace(result, kind=kind)
    opt.atomic_write(os.path.join(out, f"sweep_{kind}.csv"), opt.sweep_csv(result))
    click.echo(f"wrote sweep_{kind}.csv with {len(grid_values)} rows")
    sys.exit(EXIT_OK)


def _resumable_sweep(problem_kind, grid_values, base, cfg, opts, region,
                     preloaded, on_point):
    from .optimize import ProblemSpec, SweepResult, _sweep_key, solve

    n = len(grid_values)
    loaded = {i: payload for i, (payload, _) in preloaded.items()}
    strokes: list = [None] * n
    for i, (_, strk) in preloaded.items():
        strokes[i] = strk
    computed: list = [None] * n

    def point_spec(g):
        if problem_kind is opt.ProblemKind.MIN_LENGTH:
            return ProblemSpec(kind=problem_kind, basepoint=base, delta=float(g),
                               region=region)
        return ProblemSpec(kind=problem_kind, basepoint=base, budget=float(g),
                           region=region)

    maximizing = problem_kind is opt.ProblemKind.MAX_DIST_LENGTH
    orders = [range(n), range(n - 1, -1, -1), range(n)]
    for pass_no, order in enumerate(orders):
        prev_stroke = None
        for i in order:
            if i in loaded:
                prev_stroke = strokes[i]
                continue
            warm = [s for s in (prev_stroke, strokes[i]) if s is not None]
            o = replace(opts, seed=opts.seed + 1000 * pass_no + i)
            try:
                r = solve(point_spec(grid_values[i]), cfg, o, warm_strokes=warm)
            except Infeasible:
                r = None
            if r is not None:
                cur = computed[i]
                if cur is None or _sweep_key(problem_kind, r) < _sweep_key(problem_kind, cur):
                    computed[i] = r
                    strokes[i] = r.stroke
            prev_stroke = strokes[i]

    value = np.full(n, np.nan)
    converged = np.zeros(n, dtype=bool)
    sat = np.full(n, np.nan)
    for i in range(n):
        if i in loaded:
            payload = loaded[i]
            value[i] = payload["value"]
            converged[i] = payload["converged"]
            sat[i] = (abs(payload["length"] - grid_values[i]) if maximizing
                      else payload["constraint_residual"])
        elif computed[i] is not None:
            r = computed[i]
            value[i] = r.value
            converged[i] = r.converged
            sat[i] = (abs(r.metrics.length - grid_values[i]) if maximizing
                      else r.constraint_residual)
            on_point(i, grid_values[i], r)
    return SweepResult(kind="", grid=np.asarray(grid_values, dtype=float),
                       value=value, converged=converged,
                       saturation_residual=sat, strokes=strokes,
                       multistart_best_of=opts.starts)


@main.command("levelset")
@click.option("--mu", type=float, default=0.3, show_default=True)
@click.option("--grid-n", type=int, default=256, show_default=True)
@click.option("--p", "p_basis", type=int, default=10, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), required=True)
def levelset_cmd(mu, grid_n, p_basis, out):
    """Extract the maximal-displacement simple stroke (zero of the density)."""
    cfg = _swimmer(mu)
    try:
        res = stroke_mod.level_set_stroke(cfg, grid_n=grid_n, p=p_basis)
    except NoSignChange as exc:
        _fail(EXIT_STRUCTURAL, str(exc))
    except StrokeOptError as exc:
        _fail(EXIT_CONFIG, str(exc))
    os.makedirs(out, exist_ok=True)
    opt.atomic_write(os.path.join(out, "levelset_stroke.json"),
                     stroke_mod.stroke_to_json(res.stroke, mu))
    hydro.density_map_csv(cfg, grid_n, grid_n,
                          os.path.join(out, "density_map.csv"))
    traj = stroke_mod.evaluate(res.stroke, 2048, cfg)
    m = stroke_mod.metrics(traj)
    if res.disconnected:
        click.echo(f"warning: {res.n_components} zero-level components; "
                   "returning the dominant one", err=True)
    click.echo(f"displacement {m.displacement!r}  length {m.length!r}")
    sys.exit(EXIT_OK)


@main.command("export-shape")
@click.option("--mu", type=float, default=0.3, show_default=True)
@click.option("--point", type=str, required=True, help="shape s1,s2,s3")
@click.option("--n", type=int, default=256, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def export_shape_cmd(mu, point, n, out):
    """Write the conformal boundary of one shape as CSV (t, x, y)."""
    cfg = _swimmer(mu)
    s = np.array([float(v) for v in point.split(",")])
    if s.shape != (3,):
        _fail(EXIT_CONFIG, "--point needs three components")
    s = manifold.project_to_manifold(s, cfg.mu)
    manifold.boundary_csv(s, n, out)
    click.echo(f"wrote {out}")
    sys.exit(EXIT_OK)


if __name__ == "__main__":
    main()
